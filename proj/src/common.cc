#include "fairadj/common.h"

#include <charconv>
#include <cmath>
#include <string>

namespace fairadj {

std::string_view to_string(Task task) {
  return task == Task::regression ? "reg" : "clf";
}

Task parse_task(std::string_view name) {
  if (name == "reg" || name == "regression") return Task::regression;
  if (name == "clf" || name == "classification") return Task::classification;
  throw Error("unknown task '" + std::string(name) + "' (expected reg or clf)");
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error("cannot format double");
  return std::string(buf, end);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || end != text.data() + text.size()) {
    throw Error("not a number: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace fairadj
