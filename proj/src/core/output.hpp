// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vaur::cli {

/// An output file exists and overwriting was not allowed.
class OutputExistsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Output directory for one command run. Files are written whole through a
/// temporary sibling and a rename, so readers never see a partial file.
class OutputDir {
 public:
  /// Creates the directory if absent. Throws std::filesystem::filesystem_error.
  OutputDir(std::filesystem::path dir, bool force);

  /// Throws OutputExistsError unless every name is absent or force is set.
  /// Commands call this before doing any work.
  void claim(std::initializer_list<std::string_view> names) const;

  void write(std::string_view name, std::string_view contents) const;

  std::filesystem::path path_of(std::string_view name) const { return dir_ / std::string(name); }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  bool force_;
};

}  // namespace vaur::cli
