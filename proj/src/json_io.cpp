#include "mirflex/json_io.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mirflex/error.h"

namespace mirflex {
namespace {

void write_value(const Json& v, std::string& out) {
  switch (v.type()) {
    case Json::value_t::object: {
      out.push_back('{');
      bool first = true;
      for (const auto& [key, item] : v.items()) {
        if (!first) out.push_back(',');
        first = false;
        out += Json(key).dump();
        out.push_back(':');
        write_value(item, out);
      }
      out.push_back('}');
      break;
    }
    case Json::value_t::array: {
      out.push_back('[');
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out.push_back(',');
        write_value(v[i], out);
      }
      out.push_back(']');
      break;
    }
    case Json::value_t::number_float: {
      double d = v.get<double>();
      if (!std::isfinite(d)) throw Error(ErrorKind::kInvalidArgument, "non-finite number in JSON output");
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6f", d);
      std::string s = buf;
      if (s == "-0.000000") s = "0.000000";
      out += s;
      break;
    }
    default:
      out += v.dump();
  }
}

}  // namespace

std::string to_canonical_json(const Json& value) {
  std::string out;
  write_value(value, out);
  return out;
}

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::kParseError, e.what());
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot read " + path, path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::kParseError, path + ": " + e.what(), path);
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kOutputUnwritable, "cannot write " + path, path);
  out << text;
  if (!out) throw Error(ErrorKind::kOutputUnwritable, "short write to " + path, path);
}

}  // namespace mirflex
