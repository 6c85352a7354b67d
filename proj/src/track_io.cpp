#include "carhmm/track_io.hpp"

#include <fmt/format.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "carhmm/error.hpp"
#include "json.hpp"

namespace carhmm {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(b, e - b + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
      cur += ch;
    } else if (ch == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) return std::nullopt;
  return v;
}

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

bool is_blank(const std::string& line) { return trim(line).empty(); }

}  // namespace

std::optional<double> parse_iso8601_minutes(const std::string& raw) {
  const std::string text = trim(raw);
  // Date part.
  if (text.size() < 16 || text[4] != '-' || text[7] != '-' ||
      (text[10] != 'T' && text[10] != ' ') || text[13] != ':') {
    return std::nullopt;
  }
  const auto y = parse_int(std::string_view(text).substr(0, 4));
  const auto mo = parse_int(std::string_view(text).substr(5, 2));
  const auto d = parse_int(std::string_view(text).substr(8, 2));
  const auto hh = parse_int(std::string_view(text).substr(11, 2));
  const auto mm = parse_int(std::string_view(text).substr(14, 2));
  if (!y || !mo || !d || !hh || !mm || *hh > 23 || *mm > 59) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y},
                                        std::chrono::month{static_cast<unsigned>(*mo)},
                                        std::chrono::day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;

  std::size_t pos = 16;
  double seconds = 0.0;
  if (pos < text.size() && text[pos] == ':') {
    std::size_t end = pos + 1;
    while (end < text.size() && (std::isdigit(static_cast<unsigned char>(text[end])) ||
                                 text[end] == '.')) {
      ++end;
    }
    const auto s = parse_double(text.substr(pos + 1, end - pos - 1));
    if (!s || *s < 0.0 || *s >= 61.0) return std::nullopt;
    seconds = *s;
    pos = end;
  }
  double offset_min = 0.0;
  if (pos < text.size()) {
    const std::string tz = text.substr(pos);
    if (tz == "Z") {
      offset_min = 0.0;
    } else if ((tz[0] == '+' || tz[0] == '-') && tz.size() == 6 && tz[3] == ':') {
      const auto oh = parse_int(std::string_view(tz).substr(1, 2));
      const auto om = parse_int(std::string_view(tz).substr(4, 2));
      if (!oh || !om) return std::nullopt;
      offset_min = (tz[0] == '+' ? 1.0 : -1.0) * (*oh * 60.0 + *om);
    } else {
      return std::nullopt;
    }
  }
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return static_cast<double>(days) * 1440.0 + *hh * 60.0 + *mm + seconds / 60.0 - offset_min;
}

RawTrack parse_track_csv(std::istream& in, const CsvColumns& columns, TimeFormat format) {
  std::string line;
  while (std::getline(in, line) && is_blank(line)) {
  }
  if (is_blank(line)) throw Error(ErrorCode::MissingColumn, "no header row");
  const auto header = split_csv(line);
  auto find = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw Error(ErrorCode::MissingColumn, "column '" + name + "' not in header");
  };
  const std::size_t it = find(columns.time);
  const std::size_t ilat = find(columns.lat);
  const std::size_t ilon = find(columns.lon);

  RawTrack track;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (is_blank(line)) continue;
    ++row;
    const auto cells = split_csv(line);
    if (cells.size() < header.size()) {
      throw Error(ErrorCode::UnparsableRow, "expected " + std::to_string(header.size()) +
                                                " fields", row);
    }
    const std::optional<double> t = format == TimeFormat::iso8601
                                        ? parse_iso8601_minutes(cells[it])
                                        : parse_double(cells[it]);
    const auto lat = parse_double(cells[ilat]);
    const auto lon = parse_double(cells[ilon]);
    if (!t || !lat || !lon || !std::isfinite(*t)) {
      throw Error(ErrorCode::UnparsableRow, "could not parse '" + line + "'", row);
    }
    if (*lat < -90.0 || *lat > 90.0 || *lon < -180.0 || *lon > 180.0) {
      throw Error(ErrorCode::OutOfRangeCoordinate, "lat/lon out of range", row);
    }
    if (!track.records.empty()) {
      const auto& prev = track.records.back();
      if (!(*t > prev.time)) {
        throw Error(ErrorCode::NonMonotonicTime, "time does not increase", row);
      }
      if (std::abs(*lon - prev.lon) > 180.0) {
        throw Error(ErrorCode::AntimeridianCrossing, "longitude jumps across +-180", row);
      }
    }
    track.records.push_back({*t, *lat, *lon});
  }
  if (track.records.size() < 2) {
    throw Error(ErrorCode::TooFewRecords, "a track needs at least two records");
  }
  return track;
}

RawTrack parse_track_csv(const std::filesystem::path& path, const CsvColumns& columns,
                         TimeFormat format) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  RawTrack t = parse_track_csv(in, columns, format);
  t.id = path.stem().string();
  return t;
}

std::string format_real(double v) { return fmt::format("{:.17g}", v); }

void write_track_csv(std::ostream& out, const RawTrack& track) {
  out << "time,lat,lon\n";
  for (const auto& r : track.records) {
    out << format_real(r.time) << ',' << format_real(r.lat) << ',' << format_real(r.lon)
        << '\n';
  }
}

std::string write_params(const ParameterFile& file) {
  file.model.validate();
  json j;
  j["schema"] = kParameterSchema;
  j["k"] = file.model.k();
  j["family"] = std::string(to_string(file.model.family));
  json states = json::array();
  for (const auto& s : file.model.states) {
    states.push_back(
        {{"mu_rl", s.mu_rl}, {"phi", s.phi}, {"sigma", s.sigma}, {"c", s.c}, {"rho", s.rho}});
  }
  j["states"] = states;
  j["A"] = file.model.a.rows();
  j["mean_step_km"] = file.mean_step_km ? json(*file.mean_step_km) : json(nullptr);
  j["time_step_min"] = file.time_step_min ? json(*file.time_step_min) : json(nullptr);
  return j.dump(2) + "\n";
}

namespace {

double positive_or_throw(const json& v, const char* what) {
  const double x = v.get<double>();
  if (!(x > 0.0)) throw Error(ErrorCode::SchemaMismatch, std::string(what) + " must be > 0");
  return x;
}

}  // namespace

ParameterFile read_params(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, e.what());
  }
  try {
    if (!j.contains("schema") || j["schema"] != kParameterSchema) {
      throw Error(ErrorCode::SchemaMismatch, "expected schema carhmm/1");
    }
    ParameterFile f;
    const auto k = j.at("k").get<std::size_t>();
    f.model.family = parse_family(j.at("family").get<std::string>());
    const auto& states = j.at("states");
    if (states.size() != k) throw Error(ErrorCode::SchemaMismatch, "states must have length k");
    for (const auto& s : states) {
      f.model.states.push_back({s.at("mu_rl").get<double>(), s.at("phi").get<double>(),
                                s.at("sigma").get<double>(), s.at("c").get<double>(),
                                s.at("rho").get<double>()});
    }
    const auto rows = j.at("A").get<std::vector<std::vector<double>>>();
    if (rows.size() != k) throw Error(ErrorCode::SchemaMismatch, "A must be k x k");
    f.model.a = TransitionMatrix(rows);
    if (j.contains("mean_step_km") && !j["mean_step_km"].is_null()) {
      f.mean_step_km = positive_or_throw(j["mean_step_km"], "mean_step_km");
    }
    if (j.contains("time_step_min") && !j["time_step_min"].is_null()) {
      f.time_step_min = positive_or_throw(j["time_step_min"], "time_step_min");
    }
    f.model.validate();
    return f;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

void save_params(const std::filesystem::path& path, const ParameterFile& file) {
  write_file(path, write_params(file));
}

ParameterFile load_params(const std::filesystem::path& path) {
  return read_params(read_file(path));
}

void write_series_csv(std::ostream& out, const ObservationSeries& series) {
  out << "group,idx,d,theta\n";
  for (std::size_t g = 0; g < series.groups.size(); ++g) {
    const auto& grp = series.groups[g];
    out << g + 1 << ",0," << format_real(grp.d0) << ",\n";
    for (std::size_t t = 0; t < grp.obs.size(); ++t) {
      out << g + 1 << ',' << t + 1 << ',' << format_real(grp.obs[t].d) << ','
          << format_real(grp.obs[t].theta) << '\n';
    }
  }
}

std::string series_sidecar_json(const ObservationSeries& s) {
  json j;
  j["schema"] = kSeriesSchema;
  j["mean_step_km"] = s.mean_step_km;
  j["time_step_min"] = s.time_step_min;
  j["n_interp_locations"] = s.n_interp_locations;
  j["n_raw_locations"] = s.n_raw_locations;
  j["n_groups"] = s.n_groups;
  j["n_raw_groups"] = s.n_raw_groups;
  j["n_pairs"] = s.n_pairs();
  return j.dump(2) + "\n";
}

ObservationSeries read_series(std::istream& csv, const std::string& sidecar_json) {
  ObservationSeries s;
  std::string line;
  if (!std::getline(csv, line)) throw Error(ErrorCode::MissingColumn, "empty series CSV");
  const auto header = split_csv(line);
  if (header.size() < 4 || header[0] != "group" || header[1] != "idx" || header[2] != "d" ||
      header[3] != "theta") {
    throw Error(ErrorCode::MissingColumn, "series CSV header must be group,idx,d,theta");
  }
  std::map<long, ObservationGroup> groups;
  std::size_t row = 0;
  while (std::getline(csv, line)) {
    if (is_blank(line)) continue;
    ++row;
    const auto cells = split_csv(line);
    if (cells.size() < 4) throw Error(ErrorCode::UnparsableRow, "expected 4 fields", row);
    const auto g = parse_double(cells[0]);
    const auto idx = parse_double(cells[1]);
    const auto d = parse_double(cells[2]);
    if (!g || !idx || !d || !(*d > 0.0)) {
      throw Error(ErrorCode::UnparsableRow, "bad series row", row);
    }
    auto& grp = groups[static_cast<long>(*g)];
    if (*idx == 0.0) {
      grp.d0 = *d;
    } else {
      const auto th = parse_double(cells[3]);
      if (!th) throw Error(ErrorCode::UnparsableRow, "missing theta", row);
      if (static_cast<std::size_t>(*idx) != grp.obs.size() + 1) {
        throw Error(ErrorCode::UnparsableRow, "idx out of sequence", row);
      }
      grp.obs.push_back({*d, *th});
    }
  }
  for (auto& [id, grp] : groups) s.groups.push_back(std::move(grp));
  s.n_groups = s.n_raw_groups = s.groups.size();
  for (const auto& g : s.groups) s.n_interp_locations += g.obs.size() + 2;
  if (!sidecar_json.empty()) {
    try {
      const json j = json::parse(sidecar_json);
      if (j.value("schema", "") != kSeriesSchema) {
        throw Error(ErrorCode::SchemaMismatch, "expected schema carhmm-series/1");
      }
      s.mean_step_km = j.at("mean_step_km").get<double>();
      s.time_step_min = j.at("time_step_min").get<double>();
      s.n_interp_locations = j.at("n_interp_locations").get<std::size_t>();
      s.n_raw_locations = j.at("n_raw_locations").get<std::size_t>();
      s.n_groups = j.at("n_groups").get<std::size_t>();
      s.n_raw_groups = j.at("n_raw_groups").get<std::size_t>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaMismatch, e.what());
    }
  }
  return s;
}

void write_path_csv(std::ostream& out, const StatePath& path) {
  out << "group,idx,state\n";
  for (std::size_t g = 0; g < path.size(); ++g)
    for (std::size_t t = 0; t < path[g].size(); ++t)
      out << g + 1 << ',' << t + 1 << ',' << path[g][t] + 1 << '\n';
}

}  // namespace carhmm
