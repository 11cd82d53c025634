// core/include/phonepool/wav.h

// Copyright 2026 The phonepool Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef PHONEPOOL_WAV_H_
#define PHONEPOOL_WAV_H_

#include <iosfwd>
#include <string>

#include "phonepool/features.h"

namespace phonepool {

// RIFF/WAVE, PCM 16-bit, mono. Samples are scaled to [-1, 1).
Waveform ReadWav(std::istream& is);
Waveform ReadWavFile(const std::string& path);

void WriteWav(std::ostream& os, const Waveform& wave);
void WriteWavFile(const std::string& path, const Waveform& wave);

}  // namespace phonepool

#endif  // PHONEPOOL_WAV_H_
