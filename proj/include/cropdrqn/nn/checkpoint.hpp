// SPDX-License-Identifier: Apache-2.0
#pragma once

// Plain-text checkpoint format, version 1:
//
//   CROPDRQN-CHECKPOINT 1
//   meta <key> <value to end of line>          (zero or more)
//   tensor <name> <rows> <cols>                (zero or more, each followed by
//   <rows lines of cols values>                 `rows` lines of values)
//   checksum <16 hex digits>
//
// Values use the shortest decimal form that round-trips exactly. The checksum
// is FNV-1a 64 over every byte preceding the `checksum` line.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cropdrqn/core/checksum.hpp"
#include "cropdrqn/core/error.hpp"
#include "cropdrqn/core/text.hpp"
#include "cropdrqn/nn/tensor.hpp"

namespace cropdrqn::nn {

inline constexpr const char* kCheckpointMagic = "CROPDRQN-CHECKPOINT";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, Tensor2>> tensors;

  const Tensor2& tensor(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return t;
    throw ParseError("checkpoint has no tensor '" + name + "'");
  }
  const std::string& get(const std::string& key) const {
    auto it = meta.find(key);
    if (it == meta.end()) throw ParseError("checkpoint has no metadata key '" + key + "'");
    return it->second;
  }
};

inline std::string serialize_checkpoint(const Checkpoint& ck) {
  std::ostringstream os;
  os << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  for (const auto& [k, v] : ck.meta) {
    if (k.find_first_of(" \t\n") != std::string::npos || v.find('\n') != std::string::npos)
      throw ConfigError("checkpoint metadata must be single-line and keys space-free: " + k);
    os << "meta " << k << ' ' << v << '\n';
  }
  for (const auto& [name, t] : ck.tensors) {
    os << "tensor " << name << ' ' << t.rows << ' ' << t.cols << '\n';
    for (std::size_t r = 0; r < t.rows; ++r) {
      for (std::size_t c = 0; c < t.cols; ++c) os << (c ? " " : "") << text::exact(t(r, c));
      os << '\n';
    }
  }
  std::string body = os.str();
  body += "checksum " + to_hex(fnv1a64(body)) + "\n";
  return body;
}

inline Checkpoint parse_checkpoint(const std::string& content) {
  const auto pos = content.rfind("checksum ");
  if (pos == std::string::npos || (pos > 0 && content[pos - 1] != '\n'))
    throw ParseError("checkpoint is missing its checksum line");
  const std::string body = content.substr(0, pos);
  const std::string stated(text::trim(std::string_view(content).substr(pos + 9)));
  if (stated != to_hex(fnv1a64(body))) throw ParseError("checkpoint checksum mismatch");

  Checkpoint ck;
  std::istringstream is(body);
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(is, line)) throw ParseError("empty checkpoint");
  {
    auto tok = text::tokens(line);
    if (tok.size() != 2 || tok[0] != kCheckpointMagic) throw ParseError("not a checkpoint file", 1);
    if (text::to_long(tok[1], "version", 1) != kCheckpointVersion)
      throw ParseError("unsupported checkpoint version " + std::string(tok[1]), 1);
  }
  while (std::getline(is, line)) {
    ++lineno;
    if (line.rfind("meta ", 0) == 0) {
      const auto rest = line.substr(5);
      const auto sp = rest.find(' ');
      ck.meta[rest.substr(0, sp)] = sp == std::string::npos ? "" : rest.substr(sp + 1);
    } else if (line.rfind("tensor ", 0) == 0) {
      auto tok = text::tokens(line);
      if (tok.size() != 4) throw ParseError("bad tensor header", lineno);
      const std::string name(tok[1]);
      const auto rows = static_cast<std::size_t>(text::to_long(tok[2], "rows", lineno));
      const auto cols = static_cast<std::size_t>(text::to_long(tok[3], "cols", lineno));
      Tensor2 t(rows, cols);
      for (std::size_t r = 0; r < rows; ++r) {
        if (!std::getline(is, line)) throw ParseError("truncated tensor " + name, lineno);
        ++lineno;
        auto vals = text::tokens(line);
        if (vals.size() != cols) throw ParseError("tensor row has wrong width", lineno);
        for (std::size_t c = 0; c < cols; ++c) t(r, c) = text::to_double(vals[c], "tensor value", lineno);
      }
      ck.tensors.emplace_back(name, std::move(t));
    } else if (!text::trim(line).empty()) {
      throw ParseError("unexpected checkpoint line", lineno);
    }
  }
  return ck;
}

inline void write_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << serialize_checkpoint(ck);
  if (!os) throw IoError("failed writing '" + path + "'");
}

inline Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_checkpoint(ss.str());
}

/// Copies every parameter into `ck` under its ParamRef name.
inline void store_params(Checkpoint& ck, std::span<const ParamRef> params) {
  for (const auto& p : params) ck.tensors.emplace_back(p.name, *p.value);
}

/// Loads parameters by name; shapes must match exactly.
inline void load_params(const Checkpoint& ck, std::span<const ParamRef> params) {
  for (const auto& p : params) {
    const Tensor2& t = ck.tensor(p.name);
    if (!t.same_shape(*p.value)) throw ConfigError("checkpoint shape mismatch for " + p.name);
    *p.value = t;
  }
}

}  // namespace cropdrqn::nn
