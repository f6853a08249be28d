#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "dno/mpnum.hpp"

namespace dno {

/// Fluid depth: finite h > 0 or infinite.
class Depth {
 public:
  static Depth infinite() { return Depth(); }
  /// Throws std::invalid_argument unless h > 0.
  static Depth finite(MpReal h);
  /// Accepts "inf" or a decimal scalar.
  static Depth parse(const PrecisionCtx& ctx, std::string_view text);

  bool is_infinite() const noexcept { return !h_.has_value(); }
  bool is_finite() const noexcept { return h_.has_value(); }
  /// Throws std::logic_error for infinite depth.
  const MpReal& h() const;
  std::string to_string() const;

 private:
  Depth() = default;
  std::optional<MpReal> h_;
};

}  // namespace dno
