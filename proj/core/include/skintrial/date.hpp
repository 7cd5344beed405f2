#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace skintrial {

/// Calendar date; ISO-8601 (YYYY-MM-DD) text form.
struct Date {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;

  /// Nullopt unless `text` is a valid YYYY-MM-DD date.
  static std::optional<Date> parse(std::string_view text);

  std::string iso() const;
  /// Days since 1970-01-01.
  long days_since_epoch() const;
  Date add_days(long days) const;

  friend auto operator<=>(const Date&, const Date&) = default;
};

}  // namespace skintrial
