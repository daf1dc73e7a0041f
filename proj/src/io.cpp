// Copyright 2026 The confchain Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "confchain/io.hpp"

#include <charconv>
#include <filesystem>
#include <system_error>

#include "confchain/errors.hpp"

namespace confchain {

AtomicWriter::AtomicWriter(std::string path)
    : path_(std::move(path)), tmp_(path_ + ".tmp"), out_(tmp_, std::ios::binary | std::ios::trunc) {
  if (!out_) throw IoError("cannot open '" + tmp_ + "' for writing");
}

AtomicWriter::~AtomicWriter() {
  if (committed_) return;
  out_.close();
  std::error_code ec;
  std::filesystem::remove(tmp_, ec);
}

void AtomicWriter::write(std::string_view data) {
  out_.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out_) throw IoError("write failure on '" + tmp_ + "'");
}

void AtomicWriter::commit() {
  out_.flush();
  out_.close();
  if (!out_) throw IoError("write failure on '" + tmp_ + "'");
  std::error_code ec;
  std::filesystem::rename(tmp_, path_, ec);
  if (ec) throw IoError("cannot rename '" + tmp_ + "' to '" + path_ + "': " + ec.message());
  committed_ = true;
}

void write_file_atomic(const std::string& path, std::string_view content) {
  AtomicWriter w(path);
  w.write(content);
  w.commit();
}

std::string format_real(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace confchain
