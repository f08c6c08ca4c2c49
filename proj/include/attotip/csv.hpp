#pragma once

// Plot-ready text outputs. Every file starts with '#' comment lines carrying
// the provenance block (the JSON of the run configuration), followed by a
// header row with units and comma-separated data. Number formatting goes
// through std::to_chars and std::from_chars, so the ambient locale never
// matters.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "attotip/spectrum.hpp"

namespace attotip::pipeline {

inline constexpr int kMapFormatVersion = 1;

class IoError : public std::runtime_error {
 public:
  IoError(const std::filesystem::path& path, const std::string& message)
      : std::runtime_error(path.string() + ": " + message), path(path) {}
  std::filesystem::path path;
};

// A SpectrumMap together with the configuration that produced it.
// Layout: first row = energies (eV), first column = phases (rad), cell
// (i, j) = counts. Cells use the shortest representation that parses back to
// the same double, so read(write(x)) == x bit for bit.
struct MapFile {
  std::string provenance;  // single-line JSON
  SpectrumMap map;
};

// Named columns of doubles, one row per record.
struct Table {
  std::vector<std::string> columns;  // header cells, units included
  std::vector<std::vector<double>> rows;
  std::vector<std::string> notes;    // extra '#' lines after the provenance
};

/// Shortest decimal form that round-trips to the same double.
std::string format_exact(double value);

/// General format with `digits` significant digits (12 for derived tables).
std::string format_significant(double value, int digits = 12);

/// Parses a full token as a double; throws std::invalid_argument otherwise.
double parse_double(std::string_view token);

std::string serialize_map(const MapFile& file);

/// Throws IoError (with line number) for malformed content; `origin` names
/// the source in messages.
MapFile parse_map(std::string_view text, const std::filesystem::path& origin = "<memory>");

std::string serialize_table(const Table& table, std::string_view provenance);

/// Reads a file written by serialize_table back (values as parsed doubles).
Table parse_table(std::string_view text, const std::filesystem::path& origin = "<memory>");

/// Writes via a temporary sibling and rename, so readers never see a partial
/// file. Throws IoError naming the path.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

void write_map_file(const std::filesystem::path& path, const MapFile& file);
MapFile read_map_file(const std::filesystem::path& path);
void write_table(const std::filesystem::path& path, const Table& table, std::string_view provenance);

}  // namespace attotip::pipeline
