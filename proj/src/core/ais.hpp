#pragma once

// Raw AIS CSV ingestion: comma-separated files with a header row naming at
// least "# Timestamp", "MMSI", "Latitude", "Longitude" and "Ship type".
// Timestamps are day-first ("dd/mm/yyyy HH:MM:SS", UTC). Malformed rows are
// counted and skipped; a missing required column is fatal.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace vtp {

struct AisRecord {
  std::int64_t t = 0;  // seconds since the Unix epoch, UTC
  std::uint64_t mmsi = 0;
  double lat = 0.0;
  double lon = 0.0;
  std::string ship_type;
  std::string destination;  // optional column, empty when absent
};

struct ParseStats {
  std::size_t rows_total = 0;      // data rows seen (header excluded)
  std::size_t rows_kept = 0;       // parsed, validated, filter-passing
  std::size_t rows_malformed = 0;  // unparsable or out-of-bounds, skipped
  std::size_t rows_filtered = 0;   // well-formed but failing the ship-type filter
};

struct ParsedAis {
  std::vector<AisRecord> records;  // in file order
  ParseStats stats;
};

// Split one CSV line into fields, honoring double-quoted fields with ""
// escapes. Strips a trailing carriage return.
std::vector<std::string> split_csv_line(const std::string& line);

// Day-first "dd/mm/yyyy HH:MM:SS" to Unix seconds. Returns false on any
// syntax or calendar violation.
bool parse_day_first_timestamp(const std::string& text, std::int64_t& out);

// Parse a DMA-style AIS CSV. `ship_type_filter` empty keeps every type;
// otherwise only exact matches pass (counted in rows_filtered).
// Throws FormatError naming the first missing required column.
ParsedAis parse_ais_csv(std::istream& in, const std::string& ship_type_filter = "");
ParsedAis parse_ais_csv_file(const std::string& path, const std::string& ship_type_filter = "");

}  // namespace vtp
