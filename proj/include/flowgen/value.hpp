#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace flowgen {

/// Proleptic Gregorian calendar date.
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  static Date parse(std::string_view iso);  // "YYYY-MM-DD"
  static Date from_days(std::int64_t days);   // days since 1970-01-01

  std::int64_t days() const;
  Date add_days(std::int64_t n) const { return from_days(days() + n); }
  int weekday() const;  // 0 = Sunday
  std::string iso() const;

  auto operator<=>(const Date&) const = default;
};

struct Time {
  int hour = 0;
  int minute = 0;

  static Time parse(std::string_view text);  // "HH:MM"
  std::string iso() const;

  auto operator<=>(const Time&) const = default;
};

struct DateTime {
  Date date;
  Time time;

  static DateTime parse(std::string_view text);  // "YYYY-MM-DDTHH:MM"
  std::string iso() const;

  auto operator<=>(const DateTime&) const = default;
};

enum class ValueTag {
  Null,
  Boolean,
  Integer,
  Number,
  Text,
  Date,
  Time,
  DateTime,
  List,
  Record,
};

std::string_view tag_name(ValueTag tag);

struct Value;

/// A typed record, e.g. an Event. Field names are unique.
struct Record {
  std::string type;
  std::vector<std::pair<std::string, Value>> fields;

  const Value* find(std::string_view name) const;
  const Value& at(std::string_view name) const;
  void set(std::string name, Value value);

  bool operator==(const Record&) const;
};

using List = std::vector<Value>;

struct Value {
  using Storage = std::variant<std::monostate, bool, std::int64_t, double,
                               std::string, Date, Time, DateTime, List, Record>;
  Storage data;

  Value() = default;
  Value(bool b) : data(b) {}
  Value(std::int64_t i) : data(i) {}
  Value(int i) : data(static_cast<std::int64_t>(i)) {}
  Value(double d) : data(d) {}
  Value(std::string s) : data(std::move(s)) {}
  Value(const char* s) : data(std::string(s)) {}
  Value(Date d) : data(d) {}
  Value(Time t) : data(t) {}
  Value(DateTime t) : data(t) {}
  Value(List l);
  Value(Record r) : data(std::move(r)) {}

  ValueTag tag() const { return static_cast<ValueTag>(data.index()); }
  bool is_null() const { return tag() == ValueTag::Null; }

  bool as_bool() const;
  std::int64_t as_int() const;
  double as_number() const;  // Integer or Number
  const std::string& as_text() const;
  const Date& as_date() const;
  const Time& as_time() const;
  const DateTime& as_datetime() const;
  const List& as_list() const;
  const Record& as_record() const;

  /// Record type name for records, otherwise the tag name.
  std::string kind() const;

  bool operator==(const Value&) const = default;
};

/// Total order over comparable values of the same kind. Throws TypeMismatch
/// for values that have no ordering (lists, records, mixed tags).
std::partial_ordering compare_values(const Value& a, const Value& b);

/// Canonical surface rendering used when templates copy a value verbatim.
std::string render_text(const Value& v);

/// Canonical JSON: sorted record keys, ISO-8601 temporal values.
nlohmann::json to_json(const Value& v);

}  // namespace flowgen
