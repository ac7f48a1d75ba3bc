#pragma once

// JSON messages exchanged with an external generator process. One request is
// written to the child's stdin; one reply object is read from its stdout.
//
//   {"op":"encode","width":W,"height":H,"payload":<base64 RGB8>}
//     -> {"codec_id":ID,"payload":<base64 little-endian float64 latent>}
//   {"op":"decode","width":W,"height":H,"codec_id":ID,"payload":<latent>}
//     -> {"width":W,"height":H,"payload":<base64 RGB8>}
//   {"op":"generate","width":W,"height":H,"payload":<seed RGB8>,"genre":G,
//    "style_text":S,"style_free":B,"image_weight":w,"text_weight":w,"count":N}
//     -> {"images":[{"width":W,"height":H,"payload":<RGB8>}, ...]}
//
// Failures reply {"error":MESSAGE} and exit nonzero.

#include "avsync/generate.h"
#include "json.hpp"

namespace avsync::protocol {

nlohmann::json image_to_json(const Image& img);
/// Throws std::invalid_argument on malformed messages.
Image image_from_json(const nlohmann::json& j);

std::string latent_payload(const std::vector<double>& values);
std::vector<double> latent_from_payload(const std::string& payload);

nlohmann::json encode_request(const Image& img);
nlohmann::json decode_request(const Latent& latent, int width, int height);
nlohmann::json generate_request(const Image& seed, const PromptContext& style, std::size_t n);

/// Server side: dispatch one request to a backend and build the reply.
nlohmann::json serve(const nlohmann::json& request, GeneratorBackend& backend);

}  // namespace avsync::protocol
