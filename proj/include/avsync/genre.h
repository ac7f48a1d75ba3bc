#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "avsync/audio_io.h"

namespace avsync {

inline constexpr const char* kUnknownGenre = "unknown";

/// Genre label -> art style description, plus free-text aliases.
class GenreLexicon {
 public:
  /// The 23 shipped genres and the default alias table.
  static GenreLexicon builtin();

  /// Reads `label<TAB>description` records (UTF-8, one per line, '#' comments).
  /// The builtin aliases are kept for labels present in the file.
  static GenreLexicon load(const std::filesystem::path& path);

  GenreLexicon() = default;
  GenreLexicon(std::vector<std::pair<std::string, std::string>> entries,
               std::map<std::string, std::string> aliases);

  bool contains(const std::string& label) const;
  /// Throws std::out_of_range for unknown labels.
  const std::string& style(const std::string& label) const;
  /// Labels in table order.
  const std::vector<std::string>& labels() const { return order_; }
  const std::map<std::string, std::string>& aliases() const { return aliases_; }
  std::size_t size() const { return order_.size(); }

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::string> entries_;
  std::map<std::string, std::string> aliases_;  // alias phrase -> label
};

/// Lowercases and splits on anything outside [a-z0-9&].
std::vector<std::string> tokenize_caption(const std::string& text);

/// Case-insensitive, token-boundary phrase matching against labels and
/// aliases, longest phrase first. The most frequent genre wins; ties go to the
/// earliest occurrence. Returns kUnknownGenre when nothing matches.
std::string classify_caption(const std::string& caption, const GenreLexicon& lex);

/// Throws std::out_of_range for labels not in the lexicon.
const std::string& style_for_genre(const std::string& genre, const GenreLexicon& lex);

/// Majority vote over the known labels; ties go to the earliest segment.
std::string track_genre(const std::vector<std::string>& per_segment);

struct PromptContext {
  std::string genre = kUnknownGenre;
  std::string style_text;  // empty when style_free
  double image_weight = 0.70;
  double text_weight = 0.30;
  bool style_free = true;
};

/// Unknown genres produce a style-free context. image_weight must lie in
/// (0, 1); text_weight is its complement.
PromptContext make_prompt_context(const std::string& genre, const GenreLexicon& lex,
                                  double image_weight = 0.70);

struct Caption {
  std::size_t index = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string text;
};

using CaptionSet = std::vector<Caption>;

/// One JSON object per line: {"index", "start_s", "end_s", "text"}. Throws
/// InputError when the rows do not line up with the segments.
CaptionSet read_caption_file(const std::filesystem::path& path, const std::vector<Segment>& segments);

void write_caption_file(const std::filesystem::path& path, const CaptionSet& captions);

/// Writes each segment to `work_dir` as a WAV and runs `command` with the WAV
/// path appended; the trimmed stdout is the caption. Throws BackendError on a
/// nonzero exit or empty output.
CaptionSet run_captioner(const std::vector<std::string>& command, const std::vector<Segment>& segments,
                         const std::filesystem::path& work_dir);

}  // namespace avsync
