// src/checkpoint.cc

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

#include "selfecho/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "selfecho/error.h"

namespace selfecho {

namespace binio {

namespace {

template <typename T>
void PutLE(std::ostream &os, T v) {
  unsigned char bytes[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char *>(bytes), sizeof(T));
}

template <typename T>
T GetLE(std::istream &is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char *>(bytes), sizeof(T)))
    throw Error(ErrorKind::kCorruptFile, "unexpected end of file");
  T v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void PutU8(std::ostream &os, uint8_t v) { os.put(static_cast<char>(v)); }
void PutU32(std::ostream &os, uint32_t v) { PutLE(os, v); }
void PutU64(std::ostream &os, uint64_t v) { PutLE(os, v); }
void PutF32(std::ostream &os, float v) { PutLE(os, std::bit_cast<uint32_t>(v)); }
void PutF64(std::ostream &os, double v) { PutLE(os, std::bit_cast<uint64_t>(v)); }
void PutString(std::ostream &os, const std::string &s) {
  PutU32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint8_t GetU8(std::istream &is) { return GetLE<uint8_t>(is); }
uint32_t GetU32(std::istream &is) { return GetLE<uint32_t>(is); }
uint64_t GetU64(std::istream &is) { return GetLE<uint64_t>(is); }
float GetF32(std::istream &is) { return std::bit_cast<float>(GetLE<uint32_t>(is)); }
double GetF64(std::istream &is) { return std::bit_cast<double>(GetLE<uint64_t>(is)); }
std::string GetString(std::istream &is, uint32_t max_len) {
  const uint32_t n = GetU32(is);
  if (n > max_len) throw Error(ErrorKind::kCorruptFile, "string length out of range");
  std::string s(n, '\0');
  if (n > 0 && !is.read(s.data(), n)) throw Error(ErrorKind::kCorruptFile, "unexpected end of file");
  return s;
}

}  // namespace binio

namespace {
constexpr char kTensorMagic[] = "TNSR1";
constexpr size_t kTensorMagicLen = 5;
}  // namespace

void WriteTensorFile(const std::string &path, const std::vector<NamedTensor> &tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::kIoFailure, "cannot open " + path + " for writing");
  os.write(kTensorMagic, kTensorMagicLen);
  for (const auto &[name, t] : tensors) {
    binio::PutString(os, name);
    binio::PutU32(os, static_cast<uint32_t>(t.rank()));
    for (int d : t.shape()) binio::PutU32(os, static_cast<uint32_t>(d));
    for (double v : t.data()) binio::PutF32(os, static_cast<float>(v));
  }
  if (!os) throw Error(ErrorKind::kIoFailure, "write failed for " + path);
}

std::vector<NamedTensor> ReadTensorFile(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::kIoFailure, "cannot open " + path);
  char magic[kTensorMagicLen];
  if (!is.read(magic, kTensorMagicLen) || std::memcmp(magic, kTensorMagic, kTensorMagicLen) != 0)
    throw Error(ErrorKind::kCorruptFile, path + " is not a TNSR1 file");
  std::vector<NamedTensor> out;
  while (is.peek() != std::char_traits<char>::eof()) {
    std::string name = binio::GetString(is, 4096);
    const uint32_t rank = binio::GetU32(is);
    if (rank == 0 || rank > 8) throw Error(ErrorKind::kCorruptFile, "bad rank for " + name);
    Shape shape;
    for (uint32_t i = 0; i < rank; ++i) {
      const uint32_t d = binio::GetU32(is);
      if (d == 0 || d > (1u << 24)) throw Error(ErrorKind::kCorruptFile, "bad dim for " + name);
      shape.push_back(static_cast<int>(d));
    }
    std::vector<double> values(NumElements(shape));
    for (double &v : values) v = binio::GetF32(is);
    out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  return out;
}

void AssignByName(const std::vector<NamedTensor> &loaded, std::vector<NamedTensor> &targets) {
  std::map<std::string, const Tensor *> by_name;
  for (const auto &[name, t] : loaded) by_name[name] = &t;
  for (auto &[name, t] : targets) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw Error(ErrorKind::kCorruptFile, "missing tensor " + name);
    if (it->second->shape() != t.shape())
      throw Error(ErrorKind::kShapeMismatch, "tensor " + name + " has shape " +
                                                 ShapeString(it->second->shape()) + ", expected " +
                                                 ShapeString(t.shape()));
    auto dst = t.mutable_data();
    auto src = it->second->data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

}  // namespace selfecho
