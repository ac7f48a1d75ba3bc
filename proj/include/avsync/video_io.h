#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "avsync/image.h"

namespace avsync {

/// A directory of frame_%06d.png files, contiguous from index 0.
struct FrameStore {
  std::filesystem::path directory;
  double fps = 30.0;
  std::size_t count = 0;

  std::filesystem::path frame_path(std::size_t index) const;
};

std::string frame_file_name(std::size_t index);

/// Writes frames starting at `first_index`. Existing files are only replaced
/// when `overwrite` is set; otherwise InputError. Returns the number written.
std::size_t write_frames(const std::vector<Image>& frames, FrameStore& store, bool overwrite = false,
                         std::size_t first_index = 0);

/// Counts frame files and checks the indices are contiguous from 0. Sets
/// store.count.
std::size_t scan_frames(FrameStore& store);

/// Reads every frame, checking contiguity and uniform dimensions.
std::vector<Image> read_frames(FrameStore& store);

/// Streams frames in index order without holding them all in memory.
void for_each_frame(FrameStore& store, const std::function<void(std::size_t, const Image&)>& fn);

inline constexpr const char* kDefaultEncoderTemplate =
    "ffmpeg -y -loglevel error -framerate {fps} -i {frames_dir}/frame_%06d.png -i {audio} "
    "-c:v libx264 -pix_fmt yuv420p -c:a aac -shortest {out}";

inline constexpr const char* kDefaultExtractTemplate =
    "ffmpeg -y -loglevel error -i {video} -vf fps={fps} -start_number 0 {frames_dir}/frame_%06d.png";

/// Tokenises the template, then substitutes {fps}, {frames_dir}, {audio},
/// {out} and {video} inside each token.
std::vector<std::string> expand_template(const std::string& tmpl,
                                         const std::vector<std::pair<std::string, std::string>>& values);

/// Runs the encoder on the frame store and audio. Throws InputError for an
/// empty store, EncoderError if the encoder is missing, fails, or leaves no
/// nonempty output file.
std::filesystem::path mux(const FrameStore& store, const std::filesystem::path& audio,
                          const std::filesystem::path& out,
                          const std::string& encoder_template = kDefaultEncoderTemplate);

/// Decodes a video into a frame store through an external command.
FrameStore extract_frames(const std::filesystem::path& video, const std::filesystem::path& frames_dir,
                          double fps, const std::string& extract_template = kDefaultExtractTemplate);

}  // namespace avsync
