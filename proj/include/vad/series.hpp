#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vad/localize.hpp"
#include "vad/scoring.hpp"
#include "vad/textio.hpp"

namespace vad {

namespace detail {
inline void append_score_rows(std::ofstream& out, const AnomalyScoreSeries& s) {
  for (size_t i = 0; i < s.raw.size(); ++i)
    out << s.video_id << "," << s.raw_frame_index(static_cast<int>(i)) << "," << fmt_float(s.raw[i])
        << "," << fmt_float(s.normalized[i]) << "," << metric_name(s.metric) << "\n";
}
}  // namespace detail

inline void write_score_csv(const std::string& path, const AnomalyScoreSeries& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write score file: " + path);
  out << "video_id,frame_index,raw_score,normalized_score,metric\n";
  detail::append_score_rows(out, s);
}

inline void write_score_csv(const std::string& path, const std::vector<AnomalyScoreSeries>& all) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write score file: " + path);
  out << "video_id,frame_index,raw_score,normalized_score,metric\n";
  for (const AnomalyScoreSeries& s : all) detail::append_score_rows(out, s);
}

struct ScoreRow {
  std::string video_id;
  int frame_index = 0;
  double raw = 0.0, normalized = 0.0;
  std::string metric;
};

inline std::vector<ScoreRow> read_score_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open score file: " + path);
  std::vector<ScoreRow> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("video_id", 0) == 0) continue;
    }
    auto parts = split(line, ',');
    if (parts.size() != 5) throw std::runtime_error("bad score row in " + path + ": " + line);
    rows.push_back({parts[0], std::stoi(parts[1]), std::stod(parts[2]), std::stod(parts[3]), parts[4]});
  }
  return rows;
}

inline void write_region_csv(const std::string& path,
                             const std::vector<std::pair<std::pair<std::string, int>, Region>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write region file: " + path);
  out << "video_id,frame_index,x,y,w,h,mean_error\n";
  for (const auto& [key, r] : rows)
    out << key.first << "," << key.second << "," << r.x << "," << r.y << "," << r.w << "," << r.h
        << "," << fmt_float(r.mean_error) << "\n";
}

}  // namespace vad
