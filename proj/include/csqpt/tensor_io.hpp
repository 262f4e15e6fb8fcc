// Copyright 2026 The csqpt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Process-tensor JSON files and content hashing.
//
//   {
//     "format": "csqpt-process-tensor-v1",
//     "dim_in": 8, "dim_out": 8, "index_order": "m,n,j,k",
//     "elements": [[re, im], ...],        // row-major over (m, n, j, k)
//     "provenance": { "content_hash": ..., "config_hash": ..., ... }
//   }

#ifndef CSQPT_TENSOR_IO_HPP_
#define CSQPT_TENSOR_IO_HPP_

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "json.hpp"

#include "csqpt/dataset.hpp"
#include "csqpt/errors.hpp"
#include "csqpt/tomography.hpp"

namespace csqpt {

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline nlohmann::json tensor_elements_json(const ProcessTensor& t) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : t.elements()) arr.push_back({round_sig9(c.real()), round_sig9(c.imag())});
  return arr;
}

inline std::string tensor_content_hash(const ProcessTensor& t) {
  nlohmann::json j = {{"dim_in", t.dim_in()}, {"dim_out", t.dim_out()},
                      {"elements", tensor_elements_json(t)}};
  return sha256_hex(j.dump());
}

struct TensorFile {
  ProcessTensor tensor{1, 1};
  nlohmann::json provenance = nlohmann::json::object();
};

// Elements are written with 9 significant digits; the stored content hash
// covers the written values.
inline void save_tensor(const std::string& path, const ProcessTensor& t, nlohmann::json provenance) {
  ProcessTensor rounded = t;
  for (auto& c : rounded.elements()) c = Complex(round_sig9(c.real()), round_sig9(c.imag()));
  provenance["content_hash"] = tensor_content_hash(rounded);
  nlohmann::json doc = {{"format", "csqpt-process-tensor-v1"},
                        {"dim_in", t.dim_in()},
                        {"dim_out", t.dim_out()},
                        {"index_order", "m,n,j,k"},
                        {"elements", tensor_elements_json(rounded)},
                        {"provenance", std::move(provenance)}};
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << doc.dump(1) << '\n';
  if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

// Parses a tensor file. With `verify`, a content hash that does not match the
// elements raises IntegrityError.
inline TensorFile load_tensor(const std::string& path, bool verify = true) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file_bytes(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": invalid JSON: " + e.what());
  }
  try {
    if (doc.at("format") != "csqpt-process-tensor-v1") throw FormatError(path + ": unknown format");
    if (doc.at("index_order") != "m,n,j,k") throw FormatError(path + ": unsupported index order");
    const int di = doc.at("dim_in").get<int>(), dout = doc.at("dim_out").get<int>();
    TensorFile tf{ProcessTensor(di, dout), doc.value("provenance", nlohmann::json::object())};
    const auto& el = doc.at("elements");
    if (el.size() != tf.tensor.elements().size()) throw FormatError(path + ": element count mismatch");
    for (std::size_t i = 0; i < el.size(); ++i)
      tf.tensor.elements()[i] = Complex(el[i].at(0).get<double>(), el[i].at(1).get<double>());
    if (verify) {
      const std::string stored = tf.provenance.value("content_hash", "");
      if (stored != tensor_content_hash(tf.tensor))
        throw IntegrityError(path + ": content hash does not match tensor elements");
    }
    return tf;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace csqpt

#endif  // CSQPT_TENSOR_IO_HPP_
