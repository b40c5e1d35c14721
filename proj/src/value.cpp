#include "flowgen/value.hpp"

#include <charconv>
#include <cstdio>

#include "flowgen/errors.hpp"

namespace flowgen {
namespace {

// Civil-calendar conversions after H. Hinnant's public-domain algorithms.
std::int64_t days_from_civil(std::int64_t y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const std::int64_t yoe = y - era * 400;
  const std::int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

int days_in_month(int y, int m) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  return m == 2 && leap ? 29 : kDays[m - 1];
}

int parse_fixed(std::string_view text, std::size_t pos, std::size_t len,
                std::string_view whole) {
  int out = 0;
  if (pos + len > text.size()) throw TypeMismatch("malformed temporal literal '" + std::string(whole) + "'");
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (text[i] < '0' || text[i] > '9')
      throw TypeMismatch("malformed temporal literal '" + std::string(whole) + "'");
    out = out * 10 + (text[i] - '0');
  }
  return out;
}

void expect_char(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c)
    throw TypeMismatch("malformed temporal literal '" + std::string(text) + "'");
}

std::string two_digits(int v) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d", v);
  return buf;
}

[[noreturn]] void wrong_tag(ValueTag want, const Value& got) {
  throw TypeMismatch("expected " + std::string(tag_name(want)) + ", got " +
                     got.kind());
}

}  // namespace

Date Date::parse(std::string_view iso) {
  if (iso.size() != 10) throw TypeMismatch("malformed date '" + std::string(iso) + "'");
  Date d;
  d.year = parse_fixed(iso, 0, 4, iso);
  expect_char(iso, 4, '-');
  d.month = parse_fixed(iso, 5, 2, iso);
  expect_char(iso, 7, '-');
  d.day = parse_fixed(iso, 8, 2, iso);
  if (d.month < 1 || d.month > 12 || d.day < 1 ||
      d.day > days_in_month(d.year, d.month))
    throw TypeMismatch("invalid date '" + std::string(iso) + "'");
  return d;
}

Date Date::from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const std::int64_t doe = z - era * 146097;
  const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const std::int64_t mp = (5 * doy + 2) / 153;
  Date d;
  d.day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  d.month = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  d.year = static_cast<int>(yoe + era * 400 + (d.month <= 2));
  return d;
}

std::int64_t Date::days() const { return days_from_civil(year, month, day); }

int Date::weekday() const {
  return static_cast<int>((days() % 7 + 11) % 7);
}

std::string Date::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
  return buf;
}

Time Time::parse(std::string_view text) {
  if (text.size() != 5) throw TypeMismatch("malformed time '" + std::string(text) + "'");
  Time t;
  t.hour = parse_fixed(text, 0, 2, text);
  expect_char(text, 2, ':');
  t.minute = parse_fixed(text, 3, 2, text);
  if (t.hour > 23 || t.minute > 59)
    throw TypeMismatch("invalid time '" + std::string(text) + "'");
  return t;
}

std::string Time::iso() const { return two_digits(hour) + ":" + two_digits(minute); }

DateTime DateTime::parse(std::string_view text) {
  if (text.size() != 16 || (text[10] != 'T' && text[10] != ' '))
    throw TypeMismatch("malformed date-time '" + std::string(text) + "'");
  return DateTime{Date::parse(text.substr(0, 10)), Time::parse(text.substr(11))};
}

std::string DateTime::iso() const { return date.iso() + "T" + time.iso(); }

std::string_view tag_name(ValueTag tag) {
  switch (tag) {
    case ValueTag::Null: return "Null";
    case ValueTag::Boolean: return "Boolean";
    case ValueTag::Integer: return "Integer";
    case ValueTag::Number: return "Number";
    case ValueTag::Text: return "Text";
    case ValueTag::Date: return "Date";
    case ValueTag::Time: return "Time";
    case ValueTag::DateTime: return "DateTime";
    case ValueTag::List: return "List";
    case ValueTag::Record: return "Record";
  }
  return "?";
}

const Value* Record::find(std::string_view name) const {
  for (const auto& [k, v] : fields)
    if (k == name) return &v;
  return nullptr;
}

const Value& Record::at(std::string_view name) const {
  if (const Value* v = find(name)) return *v;
  throw TypeMismatch(type + " record has no field '" + std::string(name) + "'");
}

void Record::set(std::string name, Value value) {
  for (auto& [k, v] : fields) {
    if (k == name) {
      v = std::move(value);
      return;
    }
  }
  fields.emplace_back(std::move(name), std::move(value));
}

bool Record::operator==(const Record&) const = default;

Value::Value(List l) {
  for (std::size_t i = 1; i < l.size(); ++i) {
    if (l[i].tag() != l[0].tag())
      throw TypeMismatch("list elements must share a tag: " + l[0].kind() +
                         " vs " + l[i].kind());
  }
  data = std::move(l);
}

bool Value::as_bool() const {
  if (auto* p = std::get_if<bool>(&data)) return *p;
  wrong_tag(ValueTag::Boolean, *this);
}

std::int64_t Value::as_int() const {
  if (auto* p = std::get_if<std::int64_t>(&data)) return *p;
  wrong_tag(ValueTag::Integer, *this);
}

double Value::as_number() const {
  if (auto* p = std::get_if<double>(&data)) return *p;
  if (auto* p = std::get_if<std::int64_t>(&data)) return static_cast<double>(*p);
  wrong_tag(ValueTag::Number, *this);
}

const std::string& Value::as_text() const {
  if (auto* p = std::get_if<std::string>(&data)) return *p;
  wrong_tag(ValueTag::Text, *this);
}

const Date& Value::as_date() const {
  if (auto* p = std::get_if<Date>(&data)) return *p;
  wrong_tag(ValueTag::Date, *this);
}

const Time& Value::as_time() const {
  if (auto* p = std::get_if<Time>(&data)) return *p;
  wrong_tag(ValueTag::Time, *this);
}

const DateTime& Value::as_datetime() const {
  if (auto* p = std::get_if<DateTime>(&data)) return *p;
  wrong_tag(ValueTag::DateTime, *this);
}

const List& Value::as_list() const {
  if (auto* p = std::get_if<List>(&data)) return *p;
  wrong_tag(ValueTag::List, *this);
}

const Record& Value::as_record() const {
  if (auto* p = std::get_if<Record>(&data)) return *p;
  wrong_tag(ValueTag::Record, *this);
}

std::string Value::kind() const {
  if (auto* r = std::get_if<Record>(&data)) return r->type;
  return std::string(tag_name(tag()));
}

std::partial_ordering compare_values(const Value& a, const Value& b) {
  const bool numeric_a = a.tag() == ValueTag::Integer || a.tag() == ValueTag::Number;
  const bool numeric_b = b.tag() == ValueTag::Integer || b.tag() == ValueTag::Number;
  if (numeric_a && numeric_b) {
    if (a.tag() == ValueTag::Integer && b.tag() == ValueTag::Integer)
      return a.as_int() <=> b.as_int();
    return a.as_number() <=> b.as_number();
  }
  if (a.tag() != b.tag())
    throw TypeMismatch("cannot compare " + a.kind() + " with " + b.kind());
  switch (a.tag()) {
    case ValueTag::Null: return std::partial_ordering::equivalent;
    case ValueTag::Boolean: return a.as_bool() <=> b.as_bool();
    case ValueTag::Text: return a.as_text() <=> b.as_text();
    case ValueTag::Date: return a.as_date() <=> b.as_date();
    case ValueTag::Time: return a.as_time() <=> b.as_time();
    case ValueTag::DateTime: return a.as_datetime() <=> b.as_datetime();
    default:
      throw TypeMismatch("values of kind " + a.kind() + " are not ordered");
  }
}

std::string render_text(const Value& v) {
  switch (v.tag()) {
    case ValueTag::Null: return "null";
    case ValueTag::Boolean: return v.as_bool() ? "true" : "false";
    case ValueTag::Integer: return std::to_string(v.as_int());
    case ValueTag::Number: {
      char buf[64];
      auto res = std::to_chars(buf, buf + sizeof buf, v.as_number());
      return std::string(buf, res.ptr);
    }
    case ValueTag::Text: return v.as_text();
    case ValueTag::Date: return v.as_date().iso();
    case ValueTag::Time: return v.as_time().iso();
    case ValueTag::DateTime: return v.as_datetime().iso();
    case ValueTag::List:
    case ValueTag::Record: return to_json(v).dump();
  }
  return {};
}

nlohmann::json to_json(const Value& v) {
  switch (v.tag()) {
    case ValueTag::Null: return nullptr;
    case ValueTag::Boolean: return v.as_bool();
    case ValueTag::Integer: return v.as_int();
    case ValueTag::Number: return v.as_number();
    case ValueTag::Text: return v.as_text();
    case ValueTag::Date: return v.as_date().iso();
    case ValueTag::Time: return v.as_time().iso();
    case ValueTag::DateTime: return v.as_datetime().iso();
    case ValueTag::List: {
      auto out = nlohmann::json::array();
      for (const auto& e : v.as_list()) out.push_back(to_json(e));
      return out;
    }
    case ValueTag::Record: {
      // nlohmann::json objects are std::map backed, so keys come out sorted.
      auto out = nlohmann::json::object();
      for (const auto& [k, fv] : v.as_record().fields) out[k] = to_json(fv);
      return out;
    }
  }
  return nullptr;
}

}  // namespace flowgen
