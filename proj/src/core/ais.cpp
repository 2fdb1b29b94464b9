#include "core/ais.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_map>

#include "core/error.hpp"

namespace vtp {
namespace {

// Days from 1970-01-01 for a proleptic-Gregorian civil date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

unsigned days_in_month(int y, unsigned m) {
  static const unsigned lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2) {
    const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    return leap ? 29 : 28;
  }
  return lengths[m - 1];
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtoull(s.c_str(), &end, 10);
  return end == s.c_str() + s.size();
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c == '\r' && i + 1 == line.size()) {
      // drop a trailing carriage return
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

bool parse_day_first_timestamp(const std::string& text, std::int64_t& out) {
  // dd/mm/yyyy HH:MM:SS with fixed widths.
  const std::string s = trim(text);
  if (s.size() != 19 || s[2] != '/' || s[5] != '/' || s[10] != ' ' || s[13] != ':' || s[16] != ':')
    return false;
  auto digits = [&](std::size_t pos, std::size_t len, long& value) {
    value = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (s[i] < '0' || s[i] > '9') return false;
      value = value * 10 + (s[i] - '0');
    }
    return true;
  };
  long d = 0, mo = 0, y = 0, hh = 0, mi = 0, ss = 0;
  if (!digits(0, 2, d) || !digits(3, 2, mo) || !digits(6, 4, y) || !digits(11, 2, hh) ||
      !digits(14, 2, mi) || !digits(17, 2, ss))
    return false;
  if (mo < 1 || mo > 12 || d < 1 || hh > 23 || mi > 59 || ss > 59) return false;
  if (d > static_cast<long>(days_in_month(static_cast<int>(y), static_cast<unsigned>(mo))))
    return false;
  out = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
        hh * 3600 + mi * 60 + ss;
  return true;
}

ParsedAis parse_ais_csv(std::istream& in, const std::string& ship_type_filter) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty file: no header row");
  // Strip a UTF-8 byte-order mark if present.
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
    line.erase(0, 3);

  std::unordered_map<std::string, std::size_t> col;
  {
    const std::vector<std::string> names = split_csv_line(line);
    for (std::size_t i = 0; i < names.size(); ++i) col.emplace(trim(names[i]), i);
  }
  auto require = [&](const char* name) {
    auto it = col.find(name);
    if (it == col.end()) throw FormatError(std::string("required column missing: ") + name);
    return it->second;
  };
  const std::size_t c_time = require("# Timestamp");
  const std::size_t c_mmsi = require("MMSI");
  const std::size_t c_lat = require("Latitude");
  const std::size_t c_lon = require("Longitude");
  const std::size_t c_type = require("Ship type");
  const auto dest_it = col.find("Destination");
  const std::size_t c_dest = dest_it == col.end() ? static_cast<std::size_t>(-1) : dest_it->second;

  ParsedAis out;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++out.stats.rows_total;
    const std::vector<std::string> f = split_csv_line(line);
    const std::size_t needed = std::max({c_time, c_mmsi, c_lat, c_lon, c_type});
    if (f.size() <= needed) {
      ++out.stats.rows_malformed;
      continue;
    }
    AisRecord r;
    if (!parse_day_first_timestamp(f[c_time], r.t) || !parse_u64(trim(f[c_mmsi]), r.mmsi) ||
        !parse_double(trim(f[c_lat]), r.lat) || !parse_double(trim(f[c_lon]), r.lon) ||
        std::fabs(r.lat) > 90.0 || std::fabs(r.lon) > 180.0) {
      ++out.stats.rows_malformed;
      continue;
    }
    r.ship_type = trim(f[c_type]);
    if (c_dest != static_cast<std::size_t>(-1) && c_dest < f.size()) r.destination = trim(f[c_dest]);
    if (!ship_type_filter.empty() && r.ship_type != ship_type_filter) {
      ++out.stats.rows_filtered;
      continue;
    }
    ++out.stats.rows_kept;
    out.records.push_back(std::move(r));
  }
  return out;
}

ParsedAis parse_ais_csv_file(const std::string& path, const std::string& ship_type_filter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open AIS CSV: " + path);
  return parse_ais_csv(in, ship_type_filter);
}

}  // namespace vtp
