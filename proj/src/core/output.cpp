// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

#include "output.hpp"

#include <fstream>
#include <system_error>

namespace vaur::cli {

namespace fs = std::filesystem;

OutputDir::OutputDir(fs::path dir, bool force) : dir_(std::move(dir)), force_(force) {
  if (dir_.empty()) dir_ = ".";
  fs::create_directories(dir_);
  if (!fs::is_directory(dir_)) throw std::runtime_error("output path '" + dir_.string() + "' is not a directory");
}

void OutputDir::claim(std::initializer_list<std::string_view> names) const {
  if (force_) return;
  for (auto name : names) {
    const auto path = path_of(name);
    if (fs::exists(path)) {
      throw OutputExistsError("refusing to overwrite '" + path.string() + "' (pass --force)");
    }
  }
}

void OutputDir::write(std::string_view name, std::string_view contents) const {
  const auto target = path_of(name);
  auto temp = target;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + temp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw std::runtime_error("write to '" + temp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(temp, target, ec);
  if (ec) {
    fs::remove(temp);
    throw std::runtime_error("cannot move output into '" + target.string() + "': " + ec.message());
  }
}

}  // namespace vaur::cli
