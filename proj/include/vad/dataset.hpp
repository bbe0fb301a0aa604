#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "vad/distort.hpp"
#include "vad/image.hpp"
#include "vad/samples.hpp"
#include "vad/textio.hpp"

#ifdef VAD_WITH_OPENCV
#include <opencv2/imgcodecs.hpp>
#endif

namespace vad {

// On-disk layout: <root>/<video_id>/frame_000000.<ext>, one directory per
// video, frames named so lexicographic order is temporal order. An optional
// <root>/labels.csv holds per-frame ground truth as video_id,frame_index,label.

struct LoadOptions {
  int height = 0, width = 0;  // working resolution; 0 keeps the native size
  DistortionSpec distortion;  // applied per frame before resizing
  int max_videos = 0;         // 0 = no cap
  int max_frames = 0;         // 0 = no cap, per video
};

inline Tensor<float> load_frame_file(const std::string& path) {
  const std::string ext = std::filesystem::path(path).extension().string();
  if (ext == ".ppm" || ext == ".pgm") return load_pnm(path);
#ifdef VAD_WITH_OPENCV
  cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
  if (bgr.empty()) throw std::runtime_error("cannot decode image: " + path);
  Tensor<float> img({3, bgr.rows, bgr.cols});
  for (int y = 0; y < bgr.rows; ++y) {
    const unsigned char* row = bgr.ptr<unsigned char>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      img.at(2, y, x) = row[x * 3 + 0] / 255.0f;
      img.at(1, y, x) = row[x * 3 + 1] / 255.0f;
      img.at(0, y, x) = row[x * 3 + 2] / 255.0f;
    }
  }
  return img;
#else
  throw std::runtime_error("built without image codec support, convert to ppm: " + path);
#endif
}

inline std::map<std::string, std::vector<int>> load_labels_csv(const std::string& path) {
  std::map<std::string, std::vector<int>> labels;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open labels file: " + path);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first && line.rfind("video_id", 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    auto parts = split(line, ',');
    if (parts.size() != 3) throw std::runtime_error("bad labels row: " + line);
    const std::string& vid = parts[0];
    const int idx = std::stoi(parts[1]);
    const int lab = std::stoi(parts[2]);
    auto& v = labels[vid];
    if (static_cast<int>(v.size()) <= idx) v.resize(static_cast<size_t>(idx) + 1, 0);
    v[static_cast<size_t>(idx)] = lab;
  }
  return labels;
}

inline void save_labels_csv(const std::string& path, const std::vector<Video>& videos) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write labels file: " + path);
  out << "video_id,frame_index,label\n";
  for (const Video& v : videos)
    for (size_t i = 0; i < v.labels.size(); ++i)
      out << v.id << "," << i << "," << v.labels[i] << "\n";
}

inline std::vector<Video> load_videos(const std::string& root, const LoadOptions& opt = {}) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw std::runtime_error("dataset directory not found: " + root);

  std::vector<std::string> video_dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) video_dirs.push_back(e.path().filename().string());
  std::sort(video_dirs.begin(), video_dirs.end());
  if (video_dirs.empty()) throw std::runtime_error("no video directories under " + root);
  if (opt.max_videos > 0 && static_cast<int>(video_dirs.size()) > opt.max_videos)
    video_dirs.resize(static_cast<size_t>(opt.max_videos));

  std::map<std::string, std::vector<int>> labels;
  const fs::path labels_path = fs::path(root) / "labels.csv";
  if (fs::exists(labels_path)) labels = load_labels_csv(labels_path.string());

  std::vector<Video> videos;
  videos.reserve(video_dirs.size());
  for (const std::string& vid : video_dirs) {
    std::vector<std::string> frame_files;
    for (const auto& e : fs::directory_iterator(fs::path(root) / vid))
      if (e.is_regular_file()) frame_files.push_back(e.path().string());
    std::sort(frame_files.begin(), frame_files.end());
    if (frame_files.empty()) throw std::runtime_error("video has no frames: " + vid);
    if (opt.max_frames > 0 && static_cast<int>(frame_files.size()) > opt.max_frames)
      frame_files.resize(static_cast<size_t>(opt.max_frames));

    Video video;
    video.id = vid;
    video.frames.reserve(frame_files.size());
    for (size_t f = 0; f < frame_files.size(); ++f) {
      Tensor<float> img = load_frame_file(frame_files[f]);
      img = apply_distortion(img, opt.distortion, static_cast<int>(f));
      if (opt.height > 0 && opt.width > 0) img = bilinear_resize(img, opt.height, opt.width);
      video.frames.push_back(std::move(img));
    }
    auto it = labels.find(vid);
    if (it != labels.end()) {
      video.labels = it->second;
      video.labels.resize(video.frames.size(), 0);
    }
    videos.push_back(std::move(video));
  }
  return videos;
}

inline void save_videos(const std::string& root, const std::vector<Video>& videos) {
  namespace fs = std::filesystem;
  fs::create_directories(root);
  bool any_labels = false;
  for (const Video& v : videos) {
    const fs::path dir = fs::path(root) / v.id;
    fs::create_directories(dir);
    for (size_t f = 0; f < v.frames.size(); ++f) {
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%06zu.ppm", f);
      save_ppm((dir / name).string(), v.frames[f]);
    }
    any_labels = any_labels || !v.labels.empty();
  }
  if (any_labels) save_labels_csv((fs::path(root) / "labels.csv").string(), videos);
}

}  // namespace vad
