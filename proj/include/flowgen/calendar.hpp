#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "flowgen/registry.hpp"
#include "flowgen/value.hpp"

namespace flowgen {

/// In-memory fixture calendar. Events are "Event" records with fields
/// id, subject, start, end (DateTime) and attendees (List of Text).
struct Calendar {
  std::vector<Value> events;

  static Calendar from_json(std::string_view text);
  static Calendar load(const std::string& path);
};

Value make_event(std::string id, std::string subject, DateTime start, DateTime end,
                 std::vector<std::string> attendees);

/// Domain functions for the calendar pack:
///   today tomorrow addDays findEventsOnDate nonEmpty size first rest identity
///   eventSubject eventStart eventEnd eventAttendees createEvent
///   dateOf timeOf dateTime monthName dayOfMonth weekdayName clockTime meridiem
const FunctionRegistry& calendar_registry();

}  // namespace flowgen
