#include "avsync/generate.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>

#include "avsync/error.h"
#include "avsync/util.h"

namespace avsync {

namespace {

void check_compatible(const Latent& a, const Latent& b) {
  if (a.values.size() != b.values.size()) {
    throw std::invalid_argument("latent length mismatch: " + std::to_string(a.values.size()) +
                                " vs " + std::to_string(b.values.size()));
  }
  if (a.codec_id != b.codec_id) {
    throw std::invalid_argument("latent codec mismatch: '" + a.codec_id + "' vs '" + b.codec_id + "'");
  }
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Norm of v / scale, so huge or tiny magnitudes neither overflow nor underflow.
double scaled_norm(const std::vector<double>& v, double scale) {
  double s = 0.0;
  for (double x : v) s += (x / scale) * (x / scale);
  return std::sqrt(s);
}

double unit(unsigned char byte) { return byte / 255.0; }

}  // namespace

Latent lerp(const Latent& a, const Latent& b, double t) {
  check_compatible(a, b);
  if (t == 0.0) return a;
  if (t == 1.0) return b;
  Latent out{std::vector<double>(a.values.size()), a.codec_id};
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    out.values[i] = (1.0 - t) * a.values[i] + t * b.values[i];
  }
  return out;
}

Latent slerp(const Latent& a, const Latent& b, double t) {
  check_compatible(a, b);
  const double sa = max_abs(a.values);
  const double sb = max_abs(b.values);
  if (sa == 0.0 && sb == 0.0) throw std::invalid_argument("slerp: both latents are zero vectors");
  if (t == 0.0) return a;
  if (t == 1.0) return b;
  if (sa == 0.0 || sb == 0.0) return lerp(a, b, t);

  const double na = scaled_norm(a.values, sa);
  const double nb = scaled_norm(b.values, sb);
  double dot = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) dot += (a.values[i] / sa) * (b.values[i] / sb);
  const double omega = std::acos(std::clamp(dot / (na * nb), -1.0, 1.0));
  if (omega < kSlerpMinAngle || std::numbers::pi - omega < kSlerpMinAngle) return lerp(a, b, t);

  const double s = std::sin(omega);
  const double wa = std::sin((1.0 - t) * omega) / s;
  const double wb = std::sin(t * omega) / s;
  Latent out{std::vector<double>(a.values.size()), a.codec_id};
  for (std::size_t i = 0; i < a.values.size(); ++i) out.values[i] = wa * a.values[i] + wb * b.values[i];
  return out;
}

std::vector<Image> render_segment(const Image& start, const Image& end, const FrameSchedule& sched,
                                  GeneratorBackend& backend, const RenderOptions& options) {
  validate(start);
  validate(end);
  if (!start.same_shape(end)) throw InputError("render_segment: key images differ in size");
  if (sched.ts.empty()) throw InputError("render_segment: empty schedule");
  const std::size_t n = sched.ts.size();

  Latent la;
  Latent lb;
  try {
    la = backend.encode(start);
  } catch (const BackendError& e) {
    throw BackendError(std::string("encoding start image: ") + e.what(), 0);
  }
  try {
    lb = backend.encode(end);
  } catch (const BackendError& e) {
    throw BackendError(std::string("encoding end image: ") + e.what(), n - 1);
  }

  std::vector<Image> frames(n);
  auto render_one = [&](std::size_t j) {
    const double t = sched.ts[j];
    const Latent mix = options.interpolation == Interpolation::kSlerp ? slerp(la, lb, t) : lerp(la, lb, t);
    try {
      frames[j] = backend.decode(mix, start.width, start.height);
    } catch (const BackendError& e) {
      throw BackendError(e.what(), j);
    }
    if (!frames[j].same_shape(start)) {
      throw BackendError("decoded frame has wrong dimensions", j);
    }
  };

  const unsigned threads = backend.concurrent() ? std::max(1u, options.threads) : 1u;
  if (threads == 1 || n < 2) {
    for (std::size_t j = 0; j < n; ++j) render_one(j);
    return frames;
  }

  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t j = w; j < n; j += threads) render_one(j);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return frames;
}

Latent CrossfadeBackend::encode(const Image& img) {
  validate(img);
  Latent out{std::vector<double>(img.pixels.size()), kCodecId};
  for (std::size_t i = 0; i < img.pixels.size(); ++i) out.values[i] = img.pixels[i] / 255.0;
  return out;
}

Image CrossfadeBackend::decode(const Latent& latent, int width, int height) {
  Image img(width, height);
  if (latent.values.size() != img.pixels.size()) {
    throw BackendError("crossfade decode: latent length " + std::to_string(latent.values.size()) +
                       " does not match " + std::to_string(width) + "x" + std::to_string(height));
  }
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const double v = std::isfinite(latent.values[i]) ? latent.values[i] : 0.0;
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  }
  return img;
}

std::vector<Image> CrossfadeBackend::variations(const Image& seed, const PromptContext& style,
                                                std::size_t n) {
  return oracle_key_images(seed, style, n);
}

std::unique_ptr<GeneratorBackend> crossfade_backend() { return std::make_unique<CrossfadeBackend>(); }

std::vector<Image> oracle_key_images(const Image& seed, const PromptContext& style, std::size_t n) {
  validate(seed);
  const std::string key = style.style_free ? std::string() : style.genre;
  const std::string grade = hash_bytes("grade:" + key);

  double gain[3];
  double offset[3];
  for (int c = 0; c < 3; ++c) {
    gain[c] = 0.6 + 0.8 * unit(static_cast<unsigned char>(grade[static_cast<std::size_t>(c)]));
    offset[c] = 0.4 * (unit(static_cast<unsigned char>(grade[static_cast<std::size_t>(3 + c)])) - 0.5);
  }
  const double contrast = 0.7 + 0.8 * unit(static_cast<unsigned char>(grade[6]));
  const double tint_weight = style.style_free ? 0.0 : style.text_weight;
  const double image_weight = 1.0 - tint_weight;

  std::vector<Image> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string v = hash_bytes("variation:" + key + ":" + std::to_string(i));
    auto byte = [&](std::size_t k) { return static_cast<unsigned char>(v[k]); };
    const int shift_x = static_cast<int>((byte(0) << 8 | byte(1)) % seed.width);
    const int shift_y = static_cast<int>((byte(2) << 8 | byte(3)) % seed.height);
    const int rotate = static_cast<int>(byte(4) % 3);
    const double tint[3] = {unit(byte(5)), unit(byte(6)), unit(byte(7))};

    Image img(seed.width, seed.height);
    for (int y = 0; y < seed.height; ++y) {
      for (int x = 0; x < seed.width; ++x) {
        for (int c = 0; c < 3; ++c) {
          const int src_c = (c + rotate) % 3;
          double px = seed.at((x + shift_x) % seed.width, (y + shift_y) % seed.height, src_c) / 255.0;
          px = (px - 0.5) * contrast + 0.5;
          px = std::clamp(px * gain[c] + offset[c], 0.0, 1.0);
          px = image_weight * px + tint_weight * tint[c];
          img.at(x, y, c) = static_cast<std::uint8_t>(std::lround(std::clamp(px, 0.0, 1.0) * 255.0));
        }
      }
    }
    out.push_back(std::move(img));
  }
  return out;
}

std::vector<Image> generate_key_images(const Image& seed, const PromptContext& style,
                                       std::size_t n_segments, GeneratorBackend& backend) {
  if (n_segments < 1) throw std::invalid_argument("generate_key_images: need at least one segment");
  validate(seed);
  auto images = backend.variations(seed, style, n_segments);
  if (images.size() != n_segments) {
    throw BackendError("backend '" + backend.id() + "' returned " + std::to_string(images.size()) +
                       " key images, expected " + std::to_string(n_segments));
  }
  for (const auto& img : images) {
    if (!img.same_shape(seed)) throw BackendError("backend '" + backend.id() + "' changed the image size");
  }
  return images;
}

}  // namespace avsync
