#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "carhmm/decode.hpp"
#include "carhmm/model.hpp"
#include "carhmm/series.hpp"

namespace carhmm {

struct TrackRecord {
  double time = 0.0;  // minutes since the Unix epoch
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const TrackRecord&, const TrackRecord&) = default;
};

/// Timestamped locations as ingested: strictly increasing times, valid
/// coordinates, at least two records.
struct RawTrack {
  std::string id;
  std::vector<TrackRecord> records;
};

struct CsvColumns {
  std::string time = "time";
  std::string lat = "lat";
  std::string lon = "lon";
};

enum class TimeFormat { numeric_minutes, iso8601 };

/// Parses "YYYY-MM-DD[T ]hh:mm[:ss[.fff]][Z|+hh:mm|-hh:mm]" into minutes
/// since the Unix epoch (UTC). Returns nullopt on malformed input.
std::optional<double> parse_iso8601_minutes(const std::string& text);

/// Parses a track CSV with a header row. Rejections name the 1-based data row
/// (header excluded): UnparsableRow, NonMonotonicTime, OutOfRangeCoordinate,
/// AntimeridianCrossing. MissingColumn when a named column is absent.
RawTrack parse_track_csv(std::istream& in, const CsvColumns& columns = {},
                         TimeFormat format = TimeFormat::numeric_minutes);
RawTrack parse_track_csv(const std::filesystem::path& path, const CsvColumns& columns = {},
                         TimeFormat format = TimeFormat::numeric_minutes);

void write_track_csv(std::ostream& out, const RawTrack& track);

/// Persisted model plus the standardization needed to interpret it.
struct ParameterFile {
  CarHmmModel model;
  std::optional<double> mean_step_km;
  std::optional<double> time_step_min;

  friend bool operator==(const ParameterFile&, const ParameterFile&) = default;
};

inline constexpr const char* kParameterSchema = "carhmm/1";
inline constexpr const char* kSeriesSchema = "carhmm-series/1";

/// JSON text with "schema": "carhmm/1"; doubles round-trip exactly.
std::string write_params(const ParameterFile& file);
/// Throws SchemaMismatch / InvalidModel on malformed or invalid content.
ParameterFile read_params(const std::string& json_text);

void save_params(const std::filesystem::path& path, const ParameterFile& file);
ParameterFile load_params(const std::filesystem::path& path);

/// CSV "group,idx,d,theta": idx 0 carries d0 (theta empty), idx >= 1 the pairs.
void write_series_csv(std::ostream& out, const ObservationSeries& series);
std::string series_sidecar_json(const ObservationSeries& series);
/// Rebuilds a series from its CSV and (optional) JSON sidecar text.
ObservationSeries read_series(std::istream& csv, const std::string& sidecar_json = {});

/// CSV "group,idx,state" with 1-based idx and state, aligned with the series CSV.
void write_path_csv(std::ostream& out, const StatePath& path);

/// Reads a whole file; throws IoError.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

/// "%.17g" rendering used for every numeric output.
std::string format_real(double v);

}  // namespace carhmm
