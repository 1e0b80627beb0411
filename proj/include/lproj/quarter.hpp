#pragma once

#include <compare>
#include <cstdio>
#include <string>
#include <string_view>

#include "lproj/common.hpp"

namespace lproj {

/// Calendar quarter with total order and integer arithmetic. The textual
/// form is "1889Q1"; parse/format round-trip exactly.
class Quarter {
 public:
  Quarter() = default;
  Quarter(int year, int quarter) : serial_(year * 4 + (quarter - 1)) {
    if (quarter < 1 || quarter > 4)
      throw domain_error("quarter must be in 1..4, got " + std::to_string(quarter));
  }

  static Quarter parse(std::string_view text) {
    auto bad = [&] {
      return ingest_error("malformed quarter string: '" + std::string(text) + "'");
    };
    auto pos = text.find_first_of("Qq");
    if (pos == std::string_view::npos || pos == 0 || pos + 2 != text.size()) throw bad();
    int year = 0;
    for (char c : text.substr(0, pos)) {
      if (c < '0' || c > '9') throw bad();
      year = year * 10 + (c - '0');
    }
    char qc = text[pos + 1];
    if (qc < '1' || qc > '4') throw bad();
    return Quarter(year, qc - '0');
  }

  int year() const { return serial_ >= 0 ? serial_ / 4 : -((-serial_ + 3) / 4); }
  int quarter() const { return serial_ - year() * 4 + 1; }

  std::string str() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%dQ%d", year(), quarter());
    return buf;
  }

  Quarter operator+(int n) const { return from_serial(serial_ + n); }
  Quarter operator-(int n) const { return from_serial(serial_ - n); }
  Quarter& operator+=(int n) { serial_ += n; return *this; }
  Quarter& operator++() { ++serial_; return *this; }
  int operator-(Quarter other) const { return serial_ - other.serial_; }

  auto operator<=>(const Quarter&) const = default;

  int serial() const { return serial_; }
  static Quarter from_serial(int s) { Quarter q; q.serial_ = s; return q; }

 private:
  int serial_ = 0;  // year*4 + (quarter-1)
};

}  // namespace lproj
