#pragma once

#include <charconv>
#include <concepts>
#include <cstdio>
#include <string>
#include <string_view>

namespace sel::lab::detail {

// Doubles always go out as %.17g so files compare byte for byte.
inline void append_cell(std::string& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

template <std::integral I>
void append_cell(std::string& out, I v) {
  char buf[24];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, r.ptr);
}

inline void append_cell(std::string& out, std::string_view v) { out.append(v); }
inline void append_cell(std::string& out, const char* v) { out.append(v); }

class Csv {
 public:
  explicit Csv(std::string_view header) : text_(header) { text_ += '\n'; }

  template <class... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((first ? void(first = false) : void(text_ += ','), append_cell(text_, cells)), ...);
    text_ += '\n';
  }

  const std::string& str() const { return text_; }
  std::string take() { return std::move(text_); }

 private:
  std::string text_;
};

}  // namespace sel::lab::detail
