#include "lrchain/io/json_writer.hpp"

#include <cmath>
#include <cstdio>

namespace lrchain::io {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

namespace {

bool is_scalar(const Json& j) { return !j.is_object() && !j.is_array(); }

void write_scalar(std::string& out, const Json& j) {
  switch (j.type()) {
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (std::isfinite(v)) {
        out += format_double(v);
      } else {
        out += '"' + format_double(v) + '"';
      }
      break;
    }
    default:
      out += j.dump();
  }
}

void write(std::string& out, const Json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent) * (depth + 1), ' ');
  const std::string close(static_cast<std::size_t>(indent) * depth, ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out += ",\n";
      first = false;
      out += pad;
      out += Json(it.key()).dump();
      out += ": ";
      write(out, it.value(), indent, depth + 1);
    }
    out += "\n" + close + "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    bool flat = true;
    for (const auto& e : j) flat = flat && is_scalar(e);
    if (flat) {
      out += "[";
      for (std::size_t k = 0; k < j.size(); ++k) {
        if (k) out += ", ";
        write_scalar(out, j[k]);
      }
      out += "]";
      return;
    }
    out += "[\n";
    for (std::size_t k = 0; k < j.size(); ++k) {
      if (k) out += ",\n";
      out += pad;
      write(out, j[k], indent, depth + 1);
    }
    out += "\n" + close + "]";
  } else {
    write_scalar(out, j);
  }
}

}  // namespace

std::string to_text(const Json& doc, int indent) {
  std::string out;
  write(out, doc, indent, 0);
  out += '\n';
  return out;
}

}  // namespace lrchain::io
