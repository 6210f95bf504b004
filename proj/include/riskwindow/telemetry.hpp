#ifndef RISKWINDOW_TELEMETRY_HPP
#define RISKWINDOW_TELEMETRY_HPP

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "riskwindow/common.hpp"

namespace riskwindow {

// Headway level boundaries (seconds): level 1 safe >= 2.5, level 3 < 0.6,
// level 2 in between, level 0 = no lead vehicle measured.
inline constexpr double kHeadwaySafeSeconds = 2.5;
inline constexpr double kHeadwayCrashSeconds = 0.6;

struct TelemetryRecord {
    std::string driver_id;
    std::string trip_id;
    int t = 0;  // seconds since trip start, 1 Hz
    double speed_kmh = 0.0;
    bool harsh_accel = false;
    bool harsh_brake = false;
    bool harsh_corner = false;
    int headway_level = 0;  // 0..3
    std::optional<double> headway_s;
    int speeding_level = 0;  // 0..3
    int overtaking = 0;
    bool wiper = false;
    std::optional<double> ibi_ms;
    int tsr_level = 0;

    bool operator==(const TelemetryRecord&) const = default;
};

struct Trip {
    std::string driver_id;
    std::string trip_id;
    std::vector<TelemetryRecord> records;
};

struct DriverProfile {
    std::string driver_id;
    double age = 0.0;
    std::string gender;
    std::string education;
    double experience_years = 0.0;
    double income = 0.0;
    double env_urban = 0.0, env_rural = 0.0, env_motorway = 0.0;
    std::map<std::string, double> survey_scales;  // 5-point Likert, values in [1,5]
    bool crash_involvement = false;
    bool traffic_offence = false;
};

struct Diagnostic {
    std::string kind;       // e.g. "non_monotone_t", "headway_inconsistency"
    std::string driver_id;
    std::string trip_id;
    long row = -1;          // source row (1-based incl. header) or record t
    std::string message;

    std::string to_jsonl() const {
        std::ostringstream os;
        os << "{\"kind\":\"" << kind << "\",\"driver\":\"" << driver_id
           << "\",\"trip\":\"" << trip_id << "\",\"row\":" << row
           << ",\"message\":\"" << message << "\"}";
        return os.str();
    }
};

using Diagnostics = std::vector<Diagnostic>;

inline void write_diagnostics(const Diagnostics& ds, std::ostream& os) {
    for (const auto& d : ds) os << d.to_jsonl() << "\n";
}

// Per-record invariant checks shared by ingest and validate.
inline Diagnostics check_record(const TelemetryRecord& r) {
    Diagnostics out;
    auto add = [&](const std::string& kind, const std::string& msg) {
        out.push_back({kind, r.driver_id, r.trip_id, r.t, msg});
    };
    if (r.speed_kmh < 0.0) add("negative_speed", "speed_kmh must be >= 0");
    if (r.headway_level < 0 || r.headway_level > 3) add("headway_level_range", "headway_level must be in 0..3");
    if (r.speeding_level < 0 || r.speeding_level > 3) add("speeding_level_range", "speeding_level must be in 0..3");
    if (r.overtaking < 0) add("negative_overtaking", "overtaking must be >= 0");
    if (r.ibi_ms && *r.ibi_ms <= 0.0) add("nonpositive_ibi", "ibi_ms must be > 0 when present");
    if (r.headway_s) {
        if (*r.headway_s < 0.0) add("negative_headway_s", "headway_s must be >= 0");
        if (r.headway_level >= 1) {
            const double hs = *r.headway_s;
            const bool level3 = hs < kHeadwayCrashSeconds;
            const bool level1 = hs >= kHeadwaySafeSeconds;
            const int expected = level3 ? 3 : (level1 ? 1 : 2);
            if (expected != r.headway_level) {
                add("headway_inconsistency",
                    "headway_level " + std::to_string(r.headway_level) +
                        " inconsistent with headway_s " + std::to_string(hs));
            }
        }
    }
    return out;
}

inline Diagnostics check_profile(const DriverProfile& p) {
    Diagnostics out;
    auto add = [&](const std::string& kind, const std::string& msg) {
        out.push_back({kind, p.driver_id, "", -1, msg});
    };
    const double env_sum = p.env_urban + p.env_rural + p.env_motorway;
    for (double v : {p.env_urban, p.env_rural, p.env_motorway})
        if (v < 0.0 || v > 1.0) add("environment_share_range", "environment shares must be in [0,1]");
    if (std::abs(env_sum - 1.0) > 1e-9) add("environment_share_sum", "environment shares must sum to 1");
    for (const auto& [name, v] : p.survey_scales)
        if (v < 1.0 || v > 5.0) add("likert_range", name + " must be in [1,5]");
    if (p.age < 0.0) add("negative_age", "age must be >= 0");
    if (p.experience_years < 0.0) add("negative_experience", "experience_years must be >= 0");
    return out;
}

// Report-only validation over grouped trips: per-record invariants plus
// strictly increasing unit-step timestamps within each trip.
inline Diagnostics validate(const std::vector<Trip>& trips) {
    Diagnostics out;
    for (const auto& trip : trips) {
        for (std::size_t i = 0; i < trip.records.size(); ++i) {
            const auto& r = trip.records[i];
            auto ds = check_record(r);
            out.insert(out.end(), ds.begin(), ds.end());
            if (i > 0 && r.t != trip.records[i - 1].t + 1) {
                out.push_back({"non_monotone_t", trip.driver_id, trip.trip_id, r.t,
                               "t must increase by 1 within trip " + trip.trip_id});
            }
        }
    }
    return out;
}

// --- CSV schema ---------------------------------------------------------

// Column mapping: field name -> CSV column header. Defaults match the
// documented schema; a mapping file of `field = column` lines overrides.
struct ColumnMap {
    std::map<std::string, std::string> columns = {
        {"driver_id", "driver_id"},   {"trip_id", "trip_id"},
        {"t", "t"},                   {"speed_kmh", "speed_kmh"},
        {"harsh_accel", "harsh_accel"}, {"harsh_brake", "harsh_brake"},
        {"harsh_corner", "harsh_corner"}, {"headway_level", "headway_level"},
        {"headway_s", "headway_s"},   {"speeding_level", "speeding_level"},
        {"overtaking", "overtaking"}, {"wiper", "wiper"},
        {"ibi_ms", "ibi_ms"},         {"tsr_level", "tsr_level"},
    };

    static ColumnMap from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open column mapping file: " + path);
        ColumnMap m;
        std::string line;
        while (std::getline(in, line)) {
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            auto trim = [](std::string s) {
                const char* ws = " \t\r";
                s.erase(0, s.find_first_not_of(ws));
                auto e = s.find_last_not_of(ws);
                s.erase(e == std::string::npos ? 0 : e + 1);
                return s;
            };
            std::string key = trim(line.substr(0, eq));
            std::string val = trim(line.substr(eq + 1));
            if (key.empty()) continue;
            if (!m.columns.count(key))
                throw std::runtime_error("unknown telemetry field in mapping: " + key);
            m.columns[key] = val;
        }
        return m;
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

struct IngestResult {
    std::vector<Trip> trips;  // sorted by (driver, trip); records sorted by t
    Diagnostics diagnostics;  // one entry per rejected row or trip
    std::size_t rows_read = 0;
    std::size_t rows_rejected = 0;
};

namespace detail {

inline bool parse_bool(const std::string& s, bool& out) {
    if (s == "0" || s == "false") { out = false; return true; }
    if (s == "1" || s == "true") { out = true; return true; }
    return false;
}

inline bool parse_int(const std::string& s, int& out) {
    try {
        std::size_t pos = 0;
        out = std::stoi(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

inline bool parse_double(const std::string& s, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size() && std::isfinite(out);
    } catch (...) {
        return false;
    }
}

}  // namespace detail

// Reads one-row-per-second trip CSVs. Rejections are never silent: every
// rejected row or trip is itemised in result.diagnostics.
inline IngestResult ingest_csv(std::istream& in, const ColumnMap& schema = {}) {
    IngestResult res;
    std::string line;
    // Leading '#' lines carry provenance (config hash, seed) and are skipped.
    do {
        if (!std::getline(in, line)) throw std::runtime_error("ingest_csv: empty input");
    } while (!line.empty() && line[0] == '#');
    auto headers = split_csv_line(line);
    std::map<std::string, std::size_t> col_index;
    for (std::size_t i = 0; i < headers.size(); ++i) col_index[headers[i]] = i;

    std::map<std::string, std::size_t> field_pos;
    for (const auto& [field, col] : schema.columns) {
        auto it = col_index.find(col);
        if (it == col_index.end())
            throw std::runtime_error("ingest_csv: missing required column '" + col + "'");
        field_pos[field] = it->second;
    }

    std::map<std::pair<std::string, std::string>, Trip> trips;
    long row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty() || line == "\r" || line[0] == '#') continue;
        ++res.rows_read;
        auto cells = split_csv_line(line);
        if (cells.size() < headers.size()) {
            res.diagnostics.push_back({"short_row", "", "", row_no, "fewer cells than header"});
            ++res.rows_rejected;
            continue;
        }
        auto cell = [&](const std::string& f) -> const std::string& { return cells[field_pos.at(f)]; };

        TelemetryRecord r;
        r.driver_id = cell("driver_id");
        r.trip_id = cell("trip_id");
        bool ok = detail::parse_int(cell("t"), r.t) &&
                  detail::parse_double(cell("speed_kmh"), r.speed_kmh) &&
                  detail::parse_bool(cell("harsh_accel"), r.harsh_accel) &&
                  detail::parse_bool(cell("harsh_brake"), r.harsh_brake) &&
                  detail::parse_bool(cell("harsh_corner"), r.harsh_corner) &&
                  detail::parse_int(cell("headway_level"), r.headway_level) &&
                  detail::parse_int(cell("speeding_level"), r.speeding_level) &&
                  detail::parse_int(cell("overtaking"), r.overtaking) &&
                  detail::parse_bool(cell("wiper"), r.wiper) &&
                  detail::parse_int(cell("tsr_level"), r.tsr_level);
        // Optional fields: empty cell means absent, never 0.
        if (ok && !cell("headway_s").empty()) {
            double v;
            ok = detail::parse_double(cell("headway_s"), v);
            if (ok) r.headway_s = v;
        }
        if (ok && !cell("ibi_ms").empty()) {
            double v;
            ok = detail::parse_double(cell("ibi_ms"), v);
            if (ok) r.ibi_ms = v;
        }
        if (!ok) {
            res.diagnostics.push_back({"unparseable_cell", r.driver_id, r.trip_id, row_no,
                                       "row rejected: unparseable cell"});
            ++res.rows_rejected;
            continue;
        }
        auto ds = check_record(r);
        if (!ds.empty()) {
            for (auto& d : ds) d.row = row_no;
            res.diagnostics.insert(res.diagnostics.end(), ds.begin(), ds.end());
            ++res.rows_rejected;
            continue;
        }
        trips[{r.driver_id, r.trip_id}].records.push_back(r);
    }

    for (auto& [key, trip] : trips) {
        trip.driver_id = key.first;
        trip.trip_id = key.second;
        std::sort(trip.records.begin(), trip.records.end(),
                  [](const TelemetryRecord& a, const TelemetryRecord& b) { return a.t < b.t; });
        bool monotone = true;
        for (std::size_t i = 1; i < trip.records.size(); ++i) {
            if (trip.records[i].t != trip.records[i - 1].t + 1) {
                monotone = false;
                break;
            }
        }
        if (!monotone) {
            res.diagnostics.push_back({"non_monotone_t", trip.driver_id, trip.trip_id, -1,
                                       "trip " + trip.trip_id + " rejected: timestamps not strictly increasing with unit step"});
            res.rows_rejected += trip.records.size();
            continue;
        }
        res.trips.push_back(std::move(trip));
    }
    return res;
}

inline IngestResult ingest_csv_file(const std::string& path, const ColumnMap& schema = {}) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("ingest_csv: cannot open file: " + path);
    return ingest_csv(in, schema);
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_csv(const std::vector<Trip>& trips, std::ostream& os, const ColumnMap& schema = {}) {
    static const char* fields[] = {"driver_id", "trip_id", "t", "speed_kmh",
                                   "harsh_accel", "harsh_brake", "harsh_corner",
                                   "headway_level", "headway_s", "speeding_level",
                                   "overtaking", "wiper", "ibi_ms", "tsr_level"};
    bool first = true;
    for (const char* f : fields) {
        if (!first) os << ',';
        os << schema.columns.at(f);
        first = false;
    }
    os << '\n';
    for (const auto& trip : trips) {
        for (const auto& r : trip.records) {
            os << r.driver_id << ',' << r.trip_id << ',' << r.t << ','
               << format_double(r.speed_kmh) << ',' << (r.harsh_accel ? 1 : 0) << ','
               << (r.harsh_brake ? 1 : 0) << ',' << (r.harsh_corner ? 1 : 0) << ','
               << r.headway_level << ','
               << (r.headway_s ? format_double(*r.headway_s) : std::string()) << ','
               << r.speeding_level << ',' << r.overtaking << ',' << (r.wiper ? 1 : 0) << ','
               << (r.ibi_ms ? format_double(*r.ibi_ms) : std::string()) << ','
               << r.tsr_level << '\n';
        }
    }
}

inline void write_csv_file(const std::vector<Trip>& trips, const std::string& path,
                           const ColumnMap& schema = {}) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_csv: cannot open file: " + path);
    write_csv(trips, os, schema);
}

}  // namespace riskwindow

#endif
