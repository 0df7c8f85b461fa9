#pragma once

#include <string>

#include "signal.hpp"

namespace intona {

// PCM 16-bit little-endian mono RIFF. Samples map to [-1, 1] by /32768 on
// read; writes clamp to [-1, 1] and scale by 32767.
Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& w);

}  // namespace intona
