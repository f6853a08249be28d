#include "dno/depth.hpp"

#include <stdexcept>

namespace dno {

Depth Depth::finite(MpReal h) {
  if (!h.is_finite() || h.sign() <= 0) throw std::invalid_argument("depth must be positive");
  Depth d;
  d.h_ = std::move(h);
  return d;
}

Depth Depth::parse(const PrecisionCtx& ctx, std::string_view text) {
  if (text == "inf" || text == "infinite") return infinite();
  return finite(MpReal::parse(ctx, text));
}

const MpReal& Depth::h() const {
  if (!h_) throw std::logic_error("infinite depth has no h");
  return *h_;
}

std::string Depth::to_string() const { return h_ ? h_->to_string() : std::string("inf"); }

}  // namespace dno
