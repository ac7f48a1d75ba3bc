#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "avsync/energy.h"
#include "avsync/genre.h"
#include "avsync/image.h"

namespace avsync {

struct Latent {
  std::vector<double> values;
  std::string codec_id;
};

/// Image <-> latent codec plus key-image generator. Stands in for the
/// diffusion model and its autoencoder.
class GeneratorBackend {
 public:
  virtual ~GeneratorBackend() = default;

  virtual std::string id() const = 0;
  virtual Latent encode(const Image& img) = 0;
  virtual Image decode(const Latent& latent, int width, int height) = 0;
  /// n style-conditioned variations of `seed`, all with the seed's size.
  virtual std::vector<Image> variations(const Image& seed, const PromptContext& style,
                                        std::size_t n) = 0;
  /// Whether encode/decode may be called from several threads at once.
  virtual bool concurrent() const { return false; }
};

enum class Interpolation { kSlerp, kLerp };

Latent lerp(const Latent& a, const Latent& b, double t);

/// Spherical interpolation along the great circle between a and b, scaled as
/// [sin((1-t)W) a + sin(tW) b] / sin W. Falls back to lerp when the angle is
/// within 1e-4 rad of 0 or pi, or when exactly one input is the zero vector.
/// Throws std::invalid_argument on length/codec mismatch or two zero inputs.
Latent slerp(const Latent& a, const Latent& b, double t);

inline constexpr double kSlerpMinAngle = 1e-4;

struct RenderOptions {
  Interpolation interpolation = Interpolation::kSlerp;
  unsigned threads = 1;  // only used when the backend is concurrent
};

/// frame j = decode(interp(encode(start), encode(end), ts[j])). Backend
/// failures are rethrown as BackendError naming the frame index.
std::vector<Image> render_segment(const Image& start, const Image& end, const FrameSchedule& sched,
                                  GeneratorBackend& backend, const RenderOptions& options = {});

/// In-process oracle codec: latents are the pixel values scaled to [0, 1].
/// Interpolating in this space is a per-pixel crossfade.
class CrossfadeBackend : public GeneratorBackend {
 public:
  static constexpr const char* kCodecId = "crossfade-rgb8";

  std::string id() const override { return "crossfade"; }
  Latent encode(const Image& img) override;
  Image decode(const Latent& latent, int width, int height) override;
  std::vector<Image> variations(const Image& seed, const PromptContext& style, std::size_t n) override;
  bool concurrent() const override { return true; }
};

std::unique_ptr<GeneratorBackend> crossfade_backend();

/// Deterministic stand-in for style-conditioned image variation. A hash of
/// the genre fixes a colour grade and contrast; a hash of (genre, index)
/// picks a cyclic shift, channel rotation and tint. The tint is mixed in with
/// the prompt's text weight unless the context is style free.
std::vector<Image> oracle_key_images(const Image& seed, const PromptContext& style, std::size_t n);

/// Calls backend.variations() and checks the count and dimensions.
std::vector<Image> generate_key_images(const Image& seed, const PromptContext& style,
                                       std::size_t n_segments, GeneratorBackend& backend);

/// Speaks the JSON request/reply protocol (see protocol.h) to a child process
/// spawned once per call.
class ExternalBackend : public GeneratorBackend {
 public:
  ExternalBackend(std::vector<std::string> command, std::chrono::milliseconds timeout);

  std::string id() const override;
  Latent encode(const Image& img) override;
  Image decode(const Latent& latent, int width, int height) override;
  std::vector<Image> variations(const Image& seed, const PromptContext& style, std::size_t n) override;

 private:
  std::string call(const std::string& request) const;

  std::vector<std::string> command_;
  std::chrono::milliseconds timeout_;
};

std::unique_ptr<GeneratorBackend> external_backend(std::vector<std::string> command,
                                                   std::chrono::milliseconds timeout);

}  // namespace avsync
