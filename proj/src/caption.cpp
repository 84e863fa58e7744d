#include "vlrep/caption.hpp"

#include <httplib.h>

#include <sstream>

#include "vlrep/serialization.hpp"

namespace vlrep {

// ---------------------------------------------------------------------------
// Mock backend
// ---------------------------------------------------------------------------

std::string MockCaptionBackend::caption(const CaptionRequest& request) {
  std::ostringstream out;
  out << "Video " << request.video_id << " shown as a " << request.layout.w << "x"
      << request.layout.h << " grid of frames ";
  for (std::size_t i = 0; i < request.frame_refs.size(); ++i) {
    if (i > 0) out << (i + 1 == request.frame_refs.size() ? " and " : ", ");
    out << request.frame_refs[i];
  }
  out << ", read left to right, top to bottom.";
  return out.str();
}

// ---------------------------------------------------------------------------
// HTTP backend
// ---------------------------------------------------------------------------

HttpCaptionBackend::HttpCaptionBackend(std::string host, int port, std::string path,
                                       int timeout_seconds)
    : host_(std::move(host)), port_(port), path_(std::move(path)),
      timeout_seconds_(timeout_seconds) {
  if (host_.empty()) throw std::invalid_argument("caption backend: empty host");
  if (port_ <= 0 || port_ > 65535)
    throw std::invalid_argument("caption backend: port out of range");
  if (path_.empty() || path_.front() != '/')
    throw std::invalid_argument("caption backend: path must start with '/'");
  if (timeout_seconds_ <= 0)
    throw std::invalid_argument("caption backend: timeout must be positive");
}

std::string HttpCaptionBackend::caption(const CaptionRequest& request) {
  const std::string body = nlohmann::json(request).dump();

  // A fresh client per call keeps the backend shareable across threads.
  httplib::Client client(host_, port_);
  client.set_connection_timeout(timeout_seconds_, 0);
  client.set_read_timeout(timeout_seconds_, 0);
  client.set_write_timeout(timeout_seconds_, 0);

  auto res = client.Post(path_, body, "application/json");
  if (!res)
    throw TransportError("caption backend " + host_ + ":" + std::to_string(port_) +
                         " unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw TransportError("caption backend returned status " + std::to_string(res->status));

  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("caption backend sent malformed JSON: ") + e.what());
  }
  if (!reply.contains("text") || !reply["text"].is_string())
    throw TransportError("caption backend reply missing string field \"text\"");
  return reply["text"].get<std::string>();
}

// ---------------------------------------------------------------------------

std::string submit_caption_request(const CaptionRequest& request, CaptionBackend& backend) {
  request.validate();
  return backend.caption(request);
}

}  // namespace vlrep
