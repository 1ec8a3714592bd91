// include/selfecho/checkpoint.h

// Copyright 2026  selfecho authors

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

#ifndef SELFECHO_CHECKPOINT_H_
#define SELFECHO_CHECKPOINT_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "selfecho/layers.h"

namespace selfecho {

// "TNSR1" parameter files: the magic, then one record per tensor until end
// of file. Record: u32 name length, UTF-8 name, u32 rank, rank x u32 dims,
// row-major f32 values. All integers and floats little-endian.
void WriteTensorFile(const std::string &path, const std::vector<NamedTensor> &tensors);
std::vector<NamedTensor> ReadTensorFile(const std::string &path);

// Copies values from `loaded` into `targets` by name; every target must be
// present with a matching shape.
void AssignByName(const std::vector<NamedTensor> &loaded, std::vector<NamedTensor> &targets);

// Little-endian primitives shared by the binary formats in this project.
namespace binio {
void PutU8(std::ostream &os, uint8_t v);
void PutU32(std::ostream &os, uint32_t v);
void PutU64(std::ostream &os, uint64_t v);
void PutF32(std::ostream &os, float v);
void PutF64(std::ostream &os, double v);
void PutString(std::ostream &os, const std::string &s);
// Readers throw Error(kCorruptFile) on truncation.
uint8_t GetU8(std::istream &is);
uint32_t GetU32(std::istream &is);
uint64_t GetU64(std::istream &is);
float GetF32(std::istream &is);
double GetF64(std::istream &is);
std::string GetString(std::istream &is, uint32_t max_len = 1u << 24);
}  // namespace binio

}  // namespace selfecho

#endif  // SELFECHO_CHECKPOINT_H_
