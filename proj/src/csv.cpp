#include "attotip/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace attotip::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kMapTitle = "# attotip spectrum map";
constexpr std::string_view kCorner = "phase_rad\\energy_eV";

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  while (true) {
    const std::size_t end = line.find(',', pos);
    cells.push_back(line.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// "# key: value" -> (key, value); empty key for other comments.
std::pair<std::string_view, std::string_view> comment_entry(std::string_view line) {
  line.remove_prefix(1);
  line = trim(line);
  const std::size_t colon = line.find(':');
  if (colon == std::string_view::npos) return {{}, line};
  return {trim(line.substr(0, colon)), trim(line.substr(colon + 1))};
}

[[noreturn]] void fail(const fs::path& origin, std::size_t line, const std::string& message) {
  throw IoError(origin, "line " + std::to_string(line) + ": " + message);
}

double cell_value(std::string_view cell, const fs::path& origin, std::size_t line) {
  try {
    return parse_double(trim(cell));
  } catch (const std::invalid_argument&) {
    fail(origin, line, "not a number: '" + std::string(cell) + "'");
  }
}

std::string provenance_lines(std::string_view provenance) {
  if (provenance.find('\n') != std::string_view::npos)
    throw std::invalid_argument("provenance must be a single line");
  return "# provenance: " + std::string(provenance) + "\n";
}

}  // namespace

std::string format_exact(double value) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, r.ptr);
}

std::string format_significant(double value, int digits) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, digits);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view token) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && token.front() == '+') ++first;
  const auto r = std::from_chars(first, last, v);
  if (token.empty() || r.ec != std::errc() || r.ptr != last)
    throw std::invalid_argument("not a number: '" + std::string(token) + "'");
  return v;
}

std::string serialize_map(const MapFile& file) {
  const SpectrumMap& m = file.map;
  m.check_shape();
  std::string out;
  out += kMapTitle;
  out += "\n# format_version: " + std::to_string(kMapFormatVersion) + "\n";
  out += "# units: phase rad, energy eV, counts arbitrary\n";
  out += "# energy_grid: " + std::to_string(m.n_energies()) + " bins";
  if (!m.energies.empty()) out += ", " + format_exact(m.energies.front()) + " .. " + format_exact(m.energies.back()) + " eV";
  out += "\n# phase_grid: " + std::to_string(m.n_phases()) + " phases";
  if (!m.ce_phases.empty())
    out += ", " + format_exact(m.ce_phases.front()) + " .. " + format_exact(m.ce_phases.back()) + " rad";
  out += "\n" + provenance_lines(file.provenance);
  out += kCorner;
  for (double e : m.energies) out += "," + format_exact(e);
  out += "\n";
  for (std::size_t p = 0; p < m.n_phases(); ++p) {
    out += format_exact(m.ce_phases[p]);
    for (double c : m.row(p)) out += "," + format_exact(c);
    out += "\n";
  }
  return out;
}

MapFile parse_map(std::string_view text, const fs::path& origin) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != kMapTitle) fail(origin, 1, "not a spectrum map file");
  MapFile out;
  bool have_version = false;
  bool have_provenance = false;
  std::size_t i = 1;
  for (; i < lines.size() && !lines[i].empty() && lines[i].front() == '#'; ++i) {
    const auto [key, value] = comment_entry(lines[i]);
    if (key == "format_version") {
      if (value != std::to_string(kMapFormatVersion))
        fail(origin, i + 1, "unsupported format_version " + std::string(value));
      have_version = true;
    } else if (key == "provenance") {
      out.provenance = std::string(value);
      have_provenance = true;
    }
  }
  if (!have_version) fail(origin, i + 1, "missing format_version");
  if (!have_provenance) fail(origin, i + 1, "missing provenance block");
  if (i >= lines.size()) fail(origin, i + 1, "missing header row");
  const auto header = split_cells(lines[i]);
  if (trim(header[0]) != kCorner) fail(origin, i + 1, "header row must start with " + std::string(kCorner));
  for (std::size_t k = 1; k < header.size(); ++k) out.map.energies.push_back(cell_value(header[k], origin, i + 1));
  for (++i; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto cells = split_cells(lines[i]);
    if (cells.size() != header.size())
      fail(origin, i + 1, "expected " + std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()));
    out.map.ce_phases.push_back(cell_value(cells[0], origin, i + 1));
    for (std::size_t k = 1; k < cells.size(); ++k) out.map.counts.push_back(cell_value(cells[k], origin, i + 1));
  }
  return out;
}

std::string serialize_table(const Table& table, std::string_view provenance) {
  std::string out = provenance_lines(provenance);
  for (const auto& note : table.notes) {
    if (note.find('\n') != std::string::npos) throw std::invalid_argument("table notes must be single lines");
    out += "# " + note + "\n";
  }
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (table.columns[c].find(',') != std::string::npos)
      throw std::invalid_argument("table column names must not contain commas");
    out += (c ? "," : "") + table.columns[c];
  }
  out += "\n";
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw std::invalid_argument("table row width differs from the header");
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + format_significant(row[c]);
    out += "\n";
  }
  return out;
}

Table parse_table(std::string_view text, const fs::path& origin) {
  const auto lines = split_lines(text);
  Table out;
  std::size_t i = 0;
  while (i < lines.size() && !lines[i].empty() && lines[i].front() == '#') ++i;
  if (i >= lines.size()) fail(origin, i + 1, "missing header row");
  for (auto cell : split_cells(lines[i])) out.columns.emplace_back(trim(cell));
  for (++i; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto cells = split_cells(lines[i]);
    if (cells.size() != out.columns.size()) fail(origin, i + 1, "row width differs from the header");
    std::vector<double> row;
    for (auto cell : cells) row.push_back(cell_value(cell, origin, i + 1));
    out.rows.push_back(std::move(row));
  }
  return out;
}

void write_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError(path, "cannot open for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    os.flush();
    if (!os) {
      os.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError(path, "write failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    throw IoError(path, "rename failed: " + ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path, "cannot open for reading");
  std::ostringstream ss;
  ss << is.rdbuf();
  if (is.bad()) throw IoError(path, "read failed");
  return ss.str();
}

void write_map_file(const fs::path& path, const MapFile& file) { write_atomic(path, serialize_map(file)); }

MapFile read_map_file(const fs::path& path) { return parse_map(read_file(path), path); }

void write_table(const fs::path& path, const Table& table, std::string_view provenance) {
  write_atomic(path, serialize_table(table, provenance));
}

}  // namespace attotip::pipeline
