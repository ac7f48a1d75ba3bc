#include "avsync/video_io.h"

#include <cstdio>
#include <regex>
#include <set>
#include <sstream>

#include "avsync/error.h"
#include "avsync/process.h"

namespace avsync {

namespace {

std::string format_fps(double fps) {
  std::ostringstream s;
  s << fps;
  return s.str();
}

}  // namespace

std::string frame_file_name(std::size_t index) {
  char name[32];
  std::snprintf(name, sizeof name, "frame_%06zu.png", index);
  return name;
}

std::filesystem::path FrameStore::frame_path(std::size_t index) const {
  return directory / frame_file_name(index);
}

std::size_t write_frames(const std::vector<Image>& frames, FrameStore& store, bool overwrite,
                         std::size_t first_index) {
  if (frames.empty()) return 0;
  std::error_code ec;
  std::filesystem::create_directories(store.directory, ec);
  if (ec) throw InputError("cannot create frame directory " + store.directory.string() + ": " + ec.message());
  if (!overwrite) {
    for (std::size_t i = 0; i < frames.size(); ++i) {
      if (std::filesystem::exists(store.frame_path(first_index + i))) {
        throw InputError("refusing to overwrite " + store.frame_path(first_index + i).string());
      }
    }
  }
  for (std::size_t i = 0; i < frames.size(); ++i) write_png(store.frame_path(first_index + i), frames[i]);
  store.count = std::max(store.count, first_index + frames.size());
  return frames.size();
}

std::size_t scan_frames(FrameStore& store) {
  if (!std::filesystem::is_directory(store.directory)) {
    throw InputError("frame directory does not exist: " + store.directory.string());
  }
  static const std::regex pattern(R"(frame_(\d{6})\.png)");
  std::set<std::size_t> indices;
  for (const auto& entry : std::filesystem::directory_iterator(store.directory)) {
    std::smatch m;
    const auto name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) indices.insert(std::stoul(m[1].str()));
  }
  std::size_t expected = 0;
  for (std::size_t idx : indices) {
    if (idx != expected) throw InputError("missing " + frame_file_name(expected) + " in " + store.directory.string());
    ++expected;
  }
  store.count = indices.size();
  return store.count;
}

void for_each_frame(FrameStore& store, const std::function<void(std::size_t, const Image&)>& fn) {
  scan_frames(store);
  int width = 0;
  int height = 0;
  for (std::size_t i = 0; i < store.count; ++i) {
    const Image img = read_png(store.frame_path(i));
    if (i == 0) {
      width = img.width;
      height = img.height;
    } else if (img.width != width || img.height != height) {
      throw InputError(frame_file_name(i) + " is " + std::to_string(img.width) + "x" +
                       std::to_string(img.height) + ", expected " + std::to_string(width) + "x" +
                       std::to_string(height));
    }
    fn(i, img);
  }
}

std::vector<Image> read_frames(FrameStore& store) {
  std::vector<Image> frames;
  for_each_frame(store, [&](std::size_t, const Image& img) { frames.push_back(img); });
  return frames;
}

std::vector<std::string> expand_template(const std::string& tmpl,
                                         const std::vector<std::pair<std::string, std::string>>& values) {
  auto argv = split_command(tmpl);
  for (auto& arg : argv) {
    for (const auto& [key, value] : values) {
      const std::string placeholder = "{" + key + "}";
      for (auto pos = arg.find(placeholder); pos != std::string::npos;
           pos = arg.find(placeholder, pos + value.size())) {
        arg.replace(pos, placeholder.size(), value);
      }
    }
  }
  return argv;
}

std::filesystem::path mux(const FrameStore& store, const std::filesystem::path& audio,
                          const std::filesystem::path& out, const std::string& encoder_template) {
  if (store.count == 0) throw InputError("mux: frame store " + store.directory.string() + " is empty");
  if (!std::filesystem::exists(audio)) throw InputError("mux: audio file not found: " + audio.string());
  const auto argv = expand_template(encoder_template, {{"fps", format_fps(store.fps)},
                                                       {"frames_dir", store.directory.string()},
                                                       {"audio", audio.string()},
                                                       {"out", out.string()}});
  if (argv.empty()) throw std::invalid_argument("mux: empty encoder template");
  ProcessResult res;
  try {
    res = run_process(argv);
  } catch (const ProcessError& e) {
    throw EncoderError("video encoder unavailable (" + join_command(argv) + "): " + e.what() +
                       "; install it or pass a different encoder template");
  }
  if (res.exit_code != 0) {
    throw EncoderError("encoder '" + argv[0] + "' exited with status " + std::to_string(res.exit_code) +
                       ": " + res.stderr_text);
  }
  std::error_code ec;
  if (!std::filesystem::exists(out, ec) || std::filesystem::file_size(out, ec) == 0) {
    throw EncoderError("encoder '" + argv[0] + "' produced no output at " + out.string());
  }
  return out;
}

FrameStore extract_frames(const std::filesystem::path& video, const std::filesystem::path& frames_dir,
                          double fps, const std::string& extract_template) {
  if (!std::filesystem::exists(video)) throw InputError("video not found: " + video.string());
  std::filesystem::create_directories(frames_dir);
  const auto argv = expand_template(extract_template, {{"fps", format_fps(fps)},
                                                       {"frames_dir", frames_dir.string()},
                                                       {"video", video.string()}});
  ProcessResult res;
  try {
    res = run_process(argv);
  } catch (const ProcessError& e) {
    throw EncoderError("frame extractor unavailable (" + join_command(argv) + "): " + e.what());
  }
  if (res.exit_code != 0) {
    throw EncoderError("frame extractor '" + argv[0] + "' exited with status " +
                       std::to_string(res.exit_code) + ": " + res.stderr_text);
  }
  FrameStore store{frames_dir, fps, 0};
  scan_frames(store);
  return store;
}

}  // namespace avsync
