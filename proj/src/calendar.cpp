#include "flowgen/calendar.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "flowgen/errors.hpp"
#include "json.hpp"

namespace flowgen {
namespace {

using Args = std::span<const Value>;

constexpr const char* kMonths[] = {"january", "february", "march",     "april",
                                   "may",     "june",     "july",      "august",
                                   "september", "october", "november", "december"};
constexpr const char* kWeekdays[] = {"sunday",   "monday", "tuesday", "wednesday",
                                     "thursday", "friday", "saturday"};

TypeSpec T(ValueTag tag) { return TypeSpec::of(tag); }
TypeSpec event_type() { return TypeSpec::record("Event"); }

FunctionSpec fn(std::string name, std::vector<Parameter> params, TypeSpec result,
                FunctionImpl impl) {
  return FunctionSpec{std::move(name), std::move(params), std::move(result), std::move(impl)};
}

Value events_on(const Date& d, const ExecContext& ctx) {
  List out;
  if (ctx.calendar) {
    for (const auto& e : ctx.calendar->events)
      if (e.as_record().at("start").as_datetime().date == d) out.push_back(e);
  }
  std::stable_sort(out.begin(), out.end(), [](const Value& a, const Value& b) {
    const auto& ra = a.as_record();
    const auto& rb = b.as_record();
    auto ka = std::make_pair(ra.at("start").as_datetime(), ra.at("id").as_text());
    auto kb = std::make_pair(rb.at("start").as_datetime(), rb.at("id").as_text());
    return ka < kb;
  });
  return Value(std::move(out));
}

FunctionRegistry build_registry() {
  FunctionRegistry r;
  const auto L = T(ValueTag::List);
  const auto D = T(ValueTag::Date);
  r.add(fn("today", {}, D, [](Args, ExecContext& c) { return Value(c.now.date); }));
  r.add(fn("tomorrow", {}, D, [](Args, ExecContext& c) { return Value(c.now.date.add_days(1)); }));
  r.add(fn("addDays", {{"date", D}, {"days", T(ValueTag::Integer)}}, D, [](Args a, ExecContext&) {
    return Value(a[0].as_date().add_days(a[1].as_int()));
  }));
  r.add(fn("findEventsOnDate", {{"date", D}}, L,
           [](Args a, ExecContext& c) { return events_on(a[0].as_date(), c); }));
  r.add(fn("nonEmpty", {{"list", L}}, T(ValueTag::Boolean),
           [](Args a, ExecContext&) { return Value(!a[0].as_list().empty()); }));
  r.add(fn("size", {{"list", L}}, T(ValueTag::Integer), [](Args a, ExecContext&) {
    return Value(static_cast<std::int64_t>(a[0].as_list().size()));
  }));
  r.add(fn("first", {{"list", L}}, TypeSpec::any(), [](Args a, ExecContext&) {
    const auto& l = a[0].as_list();
    if (l.empty()) throw Error("first of an empty list");
    return l.front();
  }));
  r.add(fn("rest", {{"list", L}}, L, [](Args a, ExecContext&) {
    const auto& l = a[0].as_list();
    if (l.empty()) throw Error("rest of an empty list");
    return Value(List(l.begin() + 1, l.end()));
  }));
  r.add(fn("identity", {{"value", TypeSpec::any()}}, TypeSpec::any(),
           [](Args a, ExecContext&) { return a[0]; }));
  r.add(fn("eventSubject", {{"event", event_type()}}, T(ValueTag::Text),
           [](Args a, ExecContext&) { return a[0].as_record().at("subject"); }));
  r.add(fn("eventStart", {{"event", event_type()}}, T(ValueTag::DateTime),
           [](Args a, ExecContext&) { return a[0].as_record().at("start"); }));
  r.add(fn("eventEnd", {{"event", event_type()}}, T(ValueTag::DateTime),
           [](Args a, ExecContext&) { return a[0].as_record().at("end"); }));
  r.add(fn("eventAttendees", {{"event", event_type()}}, L,
           [](Args a, ExecContext&) { return a[0].as_record().at("attendees"); }));
  r.add(fn("createEvent",
           {{"subject", T(ValueTag::Text)},
            {"start", T(ValueTag::DateTime)},
            {"end", T(ValueTag::DateTime)},
            {"attendee", T(ValueTag::Text)}},
           event_type(), [](Args a, ExecContext& c) {
             if (!c.calendar) throw Error("createEvent needs a calendar");
             if (a[2].as_datetime() <= a[1].as_datetime())
               throw Error("event must end after it starts");
             std::string id = "new-" + std::to_string(c.calendar->events.size() + 1);
             Value e = make_event(id, a[0].as_text(), a[1].as_datetime(), a[2].as_datetime(),
                                  {a[3].as_text()});
             c.calendar->events.push_back(e);
             return e;
           }));
  r.add(fn("dateOf", {{"datetime", T(ValueTag::DateTime)}}, D,
           [](Args a, ExecContext&) { return Value(a[0].as_datetime().date); }));
  r.add(fn("timeOf", {{"datetime", T(ValueTag::DateTime)}}, T(ValueTag::Time),
           [](Args a, ExecContext&) { return Value(a[0].as_datetime().time); }));
  r.add(fn("dateTime", {{"date", D}, {"time", T(ValueTag::Time)}}, T(ValueTag::DateTime),
           [](Args a, ExecContext&) {
             return Value(DateTime{a[0].as_date(), a[1].as_time()});
           }));
  r.add(fn("monthName", {{"date", D}}, T(ValueTag::Text), [](Args a, ExecContext&) {
    return Value(std::string(kMonths[a[0].as_date().month - 1]));
  }));
  r.add(fn("dayOfMonth", {{"date", D}}, T(ValueTag::Integer), [](Args a, ExecContext&) {
    return Value(static_cast<std::int64_t>(a[0].as_date().day));
  }));
  r.add(fn("weekdayName", {{"date", D}}, T(ValueTag::Text), [](Args a, ExecContext&) {
    return Value(std::string(kWeekdays[a[0].as_date().weekday()]));
  }));
  // 12-hour clock reading without the meridiem: "10", "10:30", "12".
  r.add(fn("clockTime", {{"time", T(ValueTag::Time)}}, T(ValueTag::Text),
           [](Args a, ExecContext&) {
             const Time& t = a[0].as_time();
             const int h = t.hour % 12 == 0 ? 12 : t.hour % 12;
             std::string out = std::to_string(h);
             if (t.minute != 0) out += (t.minute < 10 ? ":0" : ":") + std::to_string(t.minute);
             return Value(out);
           }));
  r.add(fn("meridiem", {{"time", T(ValueTag::Time)}}, T(ValueTag::Text),
           [](Args a, ExecContext&) {
             return Value(std::string(a[0].as_time().hour < 12 ? "am" : "pm"));
           }));
  return r;
}

}  // namespace

Value make_event(std::string id, std::string subject, DateTime start, DateTime end,
                 std::vector<std::string> attendees) {
  Record r;
  r.type = "Event";
  List people;
  for (auto& a : attendees) people.emplace_back(std::move(a));
  r.set("id", Value(std::move(id)));
  r.set("subject", Value(std::move(subject)));
  r.set("start", Value(start));
  r.set("end", Value(end));
  r.set("attendees", Value(std::move(people)));
  return Value(std::move(r));
}

Calendar Calendar::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("calendar: ") + e.what());
  }
  if (!j.is_array()) throw Error("calendar: expected an array of events");
  Calendar cal;
  for (const auto& ev : j) {
    try {
      std::vector<std::string> people;
      for (const auto& p : ev.value("attendees", nlohmann::json::array()))
        people.push_back(p.get<std::string>());
      cal.events.push_back(make_event(ev.at("id").get<std::string>(),
                                      ev.at("subject").get<std::string>(),
                                      DateTime::parse(ev.at("start").get<std::string>()),
                                      DateTime::parse(ev.at("end").get<std::string>()),
                                      std::move(people)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("calendar: malformed event: ") + e.what());
    }
  }
  return cal;
}

Calendar Calendar::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open calendar file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

const FunctionRegistry& calendar_registry() {
  static const FunctionRegistry registry = build_registry();
  return registry;
}

}  // namespace flowgen
