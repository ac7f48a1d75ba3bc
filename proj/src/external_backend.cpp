#include <bit>
#include <cstring>
#include <stdexcept>
#include <string>

#include "avsync/error.h"
#include "avsync/generate.h"
#include "avsync/process.h"
#include "avsync/protocol.h"
#include "avsync/util.h"

namespace avsync {

namespace protocol {

static_assert(std::endian::native == std::endian::little, "latent payloads assume little-endian hosts");

nlohmann::json image_to_json(const Image& img) {
  validate(img);
  return {{"width", img.width},
          {"height", img.height},
          {"payload", base64_encode({reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size()})}};
}

Image image_from_json(const nlohmann::json& j) {
  try {
    Image img;
    img.width = j.at("width").get<int>();
    img.height = j.at("height").get<int>();
    const auto bytes = base64_decode(j.at("payload").get<std::string>());
    img.pixels.assign(bytes.begin(), bytes.end());
    validate(img);
    return img;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed image message: ") + e.what());
  }
}

std::string latent_payload(const std::vector<double>& values) {
  return base64_encode({reinterpret_cast<const char*>(values.data()), values.size() * sizeof(double)});
}

std::vector<double> latent_from_payload(const std::string& payload) {
  const auto bytes = base64_decode(payload);
  if (bytes.size() % sizeof(double) != 0) throw std::invalid_argument("latent payload is not float64 aligned");
  std::vector<double> values(bytes.size() / sizeof(double));
  std::memcpy(values.data(), bytes.data(), bytes.size());
  return values;
}

nlohmann::json encode_request(const Image& img) {
  auto j = image_to_json(img);
  j["op"] = "encode";
  return j;
}

nlohmann::json decode_request(const Latent& latent, int width, int height) {
  return {{"op", "decode"},
          {"width", width},
          {"height", height},
          {"codec_id", latent.codec_id},
          {"payload", latent_payload(latent.values)}};
}

nlohmann::json generate_request(const Image& seed, const PromptContext& style, std::size_t n) {
  auto j = image_to_json(seed);
  j["op"] = "generate";
  j["genre"] = style.genre;
  j["style_text"] = style.style_text;
  j["style_free"] = style.style_free;
  j["image_weight"] = style.image_weight;
  j["text_weight"] = style.text_weight;
  j["count"] = n;
  return j;
}

nlohmann::json serve(const nlohmann::json& request, GeneratorBackend& backend) {
  try {
    const auto op = request.at("op").get<std::string>();
    if (op == "encode") {
      const auto latent = backend.encode(image_from_json(request));
      return {{"codec_id", latent.codec_id}, {"payload", latent_payload(latent.values)}};
    }
    if (op == "decode") {
      Latent latent{latent_from_payload(request.at("payload").get<std::string>()),
                    request.value("codec_id", std::string())};
      return image_to_json(
          backend.decode(latent, request.at("width").get<int>(), request.at("height").get<int>()));
    }
    if (op == "generate") {
      PromptContext style;
      style.genre = request.value("genre", std::string(kUnknownGenre));
      style.style_text = request.value("style_text", std::string());
      style.style_free = request.value("style_free", true);
      style.image_weight = request.value("image_weight", 0.70);
      style.text_weight = request.value("text_weight", 0.30);
      const auto n = request.at("count").get<std::size_t>();
      nlohmann::json images = nlohmann::json::array();
      for (const auto& img : backend.variations(image_from_json(request), style, n)) {
        images.push_back(image_to_json(img));
      }
      return {{"images", images}};
    }
    return {{"error", "unknown op '" + op + "'"}};
  } catch (const std::exception& e) {
    return {{"error", e.what()}};
  }
}

}  // namespace protocol

namespace {

nlohmann::json parse_reply(const std::string& text, const std::string& program) {
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw BackendError("malformed reply from '" + program + "': " + e.what());
  }
  if (!reply.is_object()) throw BackendError("malformed reply from '" + program + "': not an object");
  if (reply.contains("error")) throw BackendError("'" + program + "' reported: " + reply["error"].dump());
  return reply;
}

}  // namespace

ExternalBackend::ExternalBackend(std::vector<std::string> command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  if (command_.empty()) throw std::invalid_argument("external backend: empty command");
  if (timeout_.count() <= 0) throw std::invalid_argument("external backend: timeout must be positive");
}

std::string ExternalBackend::id() const { return "external:" + join_command(command_); }

std::string ExternalBackend::call(const std::string& request) const {
  ProcessResult res;
  try {
    res = run_process(command_, request + "\n", timeout_);
  } catch (const ProcessError& e) {
    throw BackendError(e.timed_out() ? std::string("timeout: ") + e.what() : std::string(e.what()));
  }
  if (res.exit_code != 0) {
    std::string detail = res.stderr_text;
    if (detail.empty()) detail = res.stdout_text;
    while (!detail.empty() && (detail.back() == '\n' || detail.back() == '\r')) detail.pop_back();
    throw BackendError("'" + command_[0] + "' exited with status " + std::to_string(res.exit_code) +
                       (detail.empty() ? "" : ": " + detail));
  }
  return res.stdout_text;
}

Latent ExternalBackend::encode(const Image& img) {
  const auto reply = parse_reply(call(protocol::encode_request(img).dump()), command_[0]);
  try {
    return {protocol::latent_from_payload(reply.at("payload").get<std::string>()),
            reply.value("codec_id", std::string())};
  } catch (const std::exception& e) {
    throw BackendError(std::string("malformed encode reply: ") + e.what());
  }
}

Image ExternalBackend::decode(const Latent& latent, int width, int height) {
  const auto reply = parse_reply(call(protocol::decode_request(latent, width, height).dump()), command_[0]);
  try {
    return protocol::image_from_json(reply);
  } catch (const std::exception& e) {
    throw BackendError(std::string("malformed decode reply: ") + e.what());
  }
}

std::vector<Image> ExternalBackend::variations(const Image& seed, const PromptContext& style,
                                               std::size_t n) {
  const auto reply = parse_reply(call(protocol::generate_request(seed, style, n).dump()), command_[0]);
  std::vector<Image> out;
  try {
    for (const auto& j : reply.at("images")) out.push_back(protocol::image_from_json(j));
  } catch (const std::exception& e) {
    throw BackendError(std::string("malformed generate reply: ") + e.what());
  }
  return out;
}

std::unique_ptr<GeneratorBackend> external_backend(std::vector<std::string> command,
                                                   std::chrono::milliseconds timeout) {
  return std::make_unique<ExternalBackend>(std::move(command), timeout);
}

}  // namespace avsync
