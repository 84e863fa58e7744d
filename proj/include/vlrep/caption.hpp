#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "vlrep/keyframes.hpp"

namespace vlrep {

// Failure talking to a caption backend (connection refused, timeout, bad
// status, malformed response).
struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class CaptionBackend {
 public:
  virtual ~CaptionBackend() = default;
  // Returns the caption text; throws TransportError on failure. Must be
  // safe to call from multiple threads.
  virtual std::string caption(const CaptionRequest& request) = 0;
};

// Deterministic offline backend: expands a fixed template over video_id and
// the frame indices in reading order.
class MockCaptionBackend : public CaptionBackend {
 public:
  std::string caption(const CaptionRequest& request) override;
};

// Generic HTTP client: POSTs the request JSON to host:port/path and expects
// {"text": "..."} back. No retries.
class HttpCaptionBackend : public CaptionBackend {
 public:
  HttpCaptionBackend(std::string host, int port, std::string path,
                     int timeout_seconds = 10);
  std::string caption(const CaptionRequest& request) override;

 private:
  std::string host_;
  int port_;
  std::string path_;
  int timeout_seconds_;
};

// Validates the request, then delegates to the backend.
std::string submit_caption_request(const CaptionRequest& request, CaptionBackend& backend);

}  // namespace vlrep
