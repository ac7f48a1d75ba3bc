#include "avsync/genre.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "avsync/error.h"
#include "avsync/process.h"
#include "json.hpp"

namespace avsync {

namespace {

constexpr const char* kFuturism =
    "Futurism and Digital Art with neon colors, geometric patterns, and a high-tech aesthetic";
constexpr const char* kGrunge =
    "Grunge and Expressionism with chaotic, intense, and emotive elements. Darker color palettes "
    "with splashes of red and black";
constexpr const char* kPsychedelic =
    "Psychedelic Art with vibrant colors, dynamic patterns, and funky, retro elements. Think of the "
    "works of Peter Max";

const std::vector<std::pair<std::string, std::string>>& builtin_entries() {
  static const std::vector<std::pair<std::string, std::string>> entries = {
      {"pop",
       "Pop Art with bright, bold colors, high contrast, and a playful, energetic vibe. Think of "
       "the works of Andy Warhol and Roy Lichtenstein"},
      {"rock", kGrunge},
      {"punk", kGrunge},
      {"jazz",
       "Abstract Art, often with flowing lines and dynamic compositions. Use of vibrant yet deep "
       "colors, echoing the spontaneity and complexity of jazz"},
      {"blues",
       "Realism with a focus on somber and moody tones. Use of sepia tones and muted colors to "
       "evoke a sense of nostalgia and depth"},
      {"indie",
       "Indie Art and Folk Art with whimsical, eclectic, and often minimalistic elements. Use of "
       "pastel colors and hand-drawn illustrations"},
      {"classical",
       "Impressionism with delicate brushstrokes and soft color palettes. Think of the works of "
       "Claude Monet and Pierre-Auguste Renoir"},
      {"country",
       "Americana and Western Art with earthy tones and rural themes. Think of wide-open "
       "landscapes and vintage illustrations"},
      {"folk",
       "Folk Art with simple, rustic, and often narrative elements. Use of earthy colors and "
       "traditional patterns"},
      {"electronic", kFuturism},
      {"techno", kFuturism},
      {"electro", kFuturism},
      {"house", kFuturism},
      {"gospel",
       "Renaissance and Religious Art with heavenly light, vibrant colors, and ethereal themes. "
       "Think of stained glass and divine imagery"},
      {"latin",
       "Muralism and Latin American Folk Art with bold colors, dynamic compositions, and cultural "
       "motifs"},
      {"metal",
       "Gothic and Heavy Metal Art with dark color palettes, skulls, flames, and powerful, "
       "dramatic imagery"},
      {"rap",
       "Street Art and Graffiti with bold colors, sharp lines, and urban themes. Think of murals "
       "and hip-hop culture"},
      {"hip hop",
       "Graffiti and Pop Art with bright colors, dynamic compositions, and cultural references. "
       "Think of vibrant murals and street culture"},
      {"reggae",
       "Rastafarian Art with warm colors, tropical themes, and cultural motifs. Use of greens, "
       "yellows, and reds"},
      {"reggaeton",
       "Urban Art with bright colors, dynamic patterns, and Latin influences. Think of vibrant "
       "cityscapes and dance culture"},
      {"funk", kPsychedelic},
      {"disco", kPsychedelic},
      {"r&b",
       "Neo-Soul Art with warm colors, elegant lines, and romantic themes. Use of deep blues, "
       "purples, and golds"},
  };
  return entries;
}

const std::map<std::string, std::string>& builtin_aliases() {
  static const std::map<std::string, std::string> aliases = {
      {"rnb", "r&b"},         {"r and b", "r&b"},   {"hip-hop", "hip hop"},
      {"hiphop", "hip hop"},  {"edm", "electronic"},
  };
  return aliases;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct Phrase {
  std::vector<std::string> tokens;
  std::string label;
};

std::vector<Phrase> phrase_table(const GenreLexicon& lex) {
  std::vector<Phrase> phrases;
  for (const auto& label : lex.labels()) phrases.push_back({tokenize_caption(label), label});
  for (const auto& [alias, label] : lex.aliases()) phrases.push_back({tokenize_caption(alias), label});
  std::stable_sort(phrases.begin(), phrases.end(), [](const Phrase& a, const Phrase& b) {
    return a.tokens.size() > b.tokens.size();
  });
  return phrases;
}

void check_segments_match(std::size_t rows, const std::vector<Segment>& segments) {
  if (rows != segments.size()) {
    throw InputError("caption count " + std::to_string(rows) + " does not match segment count " +
                     std::to_string(segments.size()));
  }
}

}  // namespace

GenreLexicon::GenreLexicon(std::vector<std::pair<std::string, std::string>> entries,
                           std::map<std::string, std::string> aliases) {
  for (auto& [label, text] : entries) {
    auto key = lower(trim(label));
    if (key.empty()) throw InputError("genre lexicon: empty label");
    if (entries_.count(key)) throw InputError("genre lexicon: duplicate label '" + key + "'");
    order_.push_back(key);
    entries_.emplace(std::move(key), trim(text));
  }
  for (auto& [alias, label] : aliases) {
    if (entries_.count(label)) aliases_.emplace(lower(alias), label);
  }
}

GenreLexicon GenreLexicon::builtin() { return GenreLexicon(builtin_entries(), builtin_aliases()); }

GenreLexicon GenreLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open genre lexicon: " + path.string());
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected label<TAB>description");
    }
    entries.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return GenreLexicon(std::move(entries), builtin_aliases());
}

bool GenreLexicon::contains(const std::string& label) const { return entries_.count(label) > 0; }

const std::string& GenreLexicon::style(const std::string& label) const {
  const auto it = entries_.find(label);
  if (it == entries_.end()) throw std::out_of_range("unknown genre label: '" + label + "'");
  return it->second;
}

std::vector<std::string> tokenize_caption(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    const char l = static_cast<char>(std::tolower(c));
    if ((l >= 'a' && l <= 'z') || (l >= '0' && l <= '9') || l == '&') {
      cur += l;
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::string classify_caption(const std::string& caption, const GenreLexicon& lex) {
  if (trim(caption).empty()) throw std::invalid_argument("classify_caption: empty caption");
  const auto tokens = tokenize_caption(caption);
  const auto phrases = phrase_table(lex);

  std::map<std::string, std::pair<int, std::size_t>> hits;  // label -> (count, first position)
  for (std::size_t i = 0; i < tokens.size();) {
    const Phrase* match = nullptr;
    for (const auto& p : phrases) {
      if (p.tokens.empty() || i + p.tokens.size() > tokens.size()) continue;
      if (std::equal(p.tokens.begin(), p.tokens.end(), tokens.begin() + static_cast<long>(i))) {
        match = &p;
        break;
      }
    }
    if (match == nullptr) {
      ++i;
      continue;
    }
    auto [it, inserted] = hits.try_emplace(match->label, 0, i);
    ++it->second.first;
    i += match->tokens.size();
  }

  std::string best = kUnknownGenre;
  int best_count = 0;
  std::size_t best_pos = 0;
  for (const auto& [label, hit] : hits) {
    const auto [count, pos] = hit;
    if (count > best_count || (count == best_count && pos < best_pos)) {
      best = label;
      best_count = count;
      best_pos = pos;
    }
  }
  return best;
}

const std::string& style_for_genre(const std::string& genre, const GenreLexicon& lex) {
  return lex.style(genre);
}

std::string track_genre(const std::vector<std::string>& per_segment) {
  if (per_segment.empty()) throw std::invalid_argument("track_genre: no segment labels");
  std::map<std::string, std::pair<int, std::size_t>> votes;
  for (std::size_t i = 0; i < per_segment.size(); ++i) {
    if (per_segment[i] == kUnknownGenre) continue;
    auto [it, inserted] = votes.try_emplace(per_segment[i], 0, i);
    ++it->second.first;
  }
  std::string best = kUnknownGenre;
  int best_count = 0;
  std::size_t best_pos = 0;
  for (const auto& [label, vote] : votes) {
    if (vote.first > best_count || (vote.first == best_count && vote.second < best_pos)) {
      best = label;
      best_count = vote.first;
      best_pos = vote.second;
    }
  }
  return best;
}

PromptContext make_prompt_context(const std::string& genre, const GenreLexicon& lex,
                                  double image_weight) {
  if (!(image_weight > 0.0 && image_weight < 1.0)) {
    throw std::invalid_argument("make_prompt_context: image_weight must be in (0, 1)");
  }
  PromptContext ctx;
  ctx.genre = genre;
  ctx.image_weight = image_weight;
  ctx.text_weight = 1.0 - image_weight;
  if (genre != kUnknownGenre && lex.contains(genre)) {
    ctx.style_text = lex.style(genre);
    ctx.style_free = false;
  } else {
    ctx.genre = kUnknownGenre;
  }
  return ctx;
}

CaptionSet read_caption_file(const std::filesystem::path& path, const std::vector<Segment>& segments) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open caption file: " + path.string());
  CaptionSet captions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Caption c;
      c.index = j.at("index").get<std::size_t>();
      c.start_s = j.value("start_s", 0.0);
      c.end_s = j.value("end_s", 0.0);
      c.text = trim(j.at("text").get<std::string>());
      captions.push_back(std::move(c));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  check_segments_match(captions.size(), segments);
  std::sort(captions.begin(), captions.end(),
            [](const Caption& a, const Caption& b) { return a.index < b.index; });
  for (std::size_t i = 0; i < captions.size(); ++i) {
    if (captions[i].index != segments[i].index) {
      throw InputError("caption file has no row for segment " + std::to_string(segments[i].index));
    }
    if (captions[i].text.empty()) {
      throw InputError("caption for segment " + std::to_string(i) + " is empty");
    }
  }
  return captions;
}

void write_caption_file(const std::filesystem::path& path, const CaptionSet& captions) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write caption file: " + path.string());
  for (const auto& c : captions) {
    out << nlohmann::json{{"index", c.index}, {"start_s", c.start_s}, {"end_s", c.end_s}, {"text", c.text}}.dump()
        << '\n';
  }
}

CaptionSet run_captioner(const std::vector<std::string>& command, const std::vector<Segment>& segments,
                         const std::filesystem::path& work_dir) {
  if (command.empty()) throw std::invalid_argument("run_captioner: empty command");
  std::filesystem::create_directories(work_dir);
  CaptionSet captions;
  for (const auto& seg : segments) {
    char name[32];
    std::snprintf(name, sizeof name, "segment_%03zu.wav", seg.index);
    const auto wav = work_dir / name;
    write_wav(wav, seg.buffer);

    auto argv = command;
    argv.push_back(wav.string());
    ProcessResult res;
    try {
      res = run_process(argv);
    } catch (const ProcessError& e) {
      throw BackendError(std::string("captioner: ") + e.what());
    }
    if (res.exit_code != 0) {
      throw BackendError("captioner '" + join_command(argv) + "' exited with " +
                         std::to_string(res.exit_code) + ": " + trim(res.stderr_text));
    }
    Caption c;
    c.index = seg.index;
    c.start_s = seg.start_s;
    c.end_s = seg.start_s + seg.duration_s;
    c.text = trim(res.stdout_text);
    if (c.text.empty()) throw BackendError("captioner printed nothing for segment " + std::to_string(seg.index));
    captions.push_back(std::move(c));
  }
  return captions;
}

}  // namespace avsync
