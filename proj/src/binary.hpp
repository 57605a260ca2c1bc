// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

// Little-endian encode/decode helpers shared by the DPTH, TRCK and CTRL
// formats. Internal to the library.

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "motionforge/errors.hpp"

namespace motionforge::detail {

template <typename T>
T byteswap_if_big(T value) {
  if constexpr (std::endian::native == std::endian::little || sizeof(T) == 1) {
    return value;
  } else {
    auto bytes = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

class ByteWriter {
 public:
  void magic(std::string_view tag) { bytes_.insert(bytes_.end(), tag.begin(), tag.end()); }

  template <typename T>
  void put(T value) {
    value = byteswap_if_big(value);
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }

  void reserve(std::size_t n) { bytes_.reserve(n); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string_view format)
      : bytes_(bytes), format_(format) {}

  void expect_magic(std::string_view tag) {
    if (bytes_.size() < tag.size() ||
        std::memcmp(bytes_.data(), tag.data(), tag.size()) != 0) {
      throw Error(ErrorCode::CorruptHeader, std::string(format_) + ": bad magic");
    }
    offset_ = tag.size();
  }

  template <typename T>
  T header() {
    if (offset_ + sizeof(T) > bytes_.size()) {
      throw Error(ErrorCode::CorruptHeader, std::string(format_) + ": header truncated");
    }
    return take<T>();
  }

  template <typename T>
  T payload() {
    if (offset_ + sizeof(T) > bytes_.size()) {
      throw Error(ErrorCode::TruncatedPayload, std::string(format_) + ": payload truncated");
    }
    return take<T>();
  }

  void require_payload(std::size_t n) const {
    if (bytes_.size() - offset_ < n) {
      throw Error(ErrorCode::TruncatedPayload,
                  std::string(format_) + ": expected " + std::to_string(n) + " payload bytes, found " +
                      std::to_string(bytes_.size() - offset_));
    }
  }

  std::size_t remaining() const { return bytes_.size() - offset_; }

 private:
  template <typename T>
  T take() {
    T value;
    std::memcpy(&value, bytes_.data() + offset_, sizeof(T));
    offset_ += sizeof(T);
    return byteswap_if_big(value);
  }

  std::span<const std::uint8_t> bytes_;
  std::string_view format_;
  std::size_t offset_ = 0;
};

}  // namespace motionforge::detail
