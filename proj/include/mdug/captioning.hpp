#pragma once

// Video and image captioners behind one interface. The stub captioners map
// pooled frame features to the nearest latent-scene mean and emit a fixed
// template sentence; external captioners run a command over a frame archive.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "mdug/corpus.hpp"

namespace mdug {

enum class CaptionSource { video, image };

struct Caption {
  std::string text;  // kAbstainCaption when no scene can be read off the frames
  CaptionSource source = CaptionSource::video;
  double t_begin = 0.0;
  double t_end = 0.0;
};

enum class CaptionerKind { stub, external };

struct CaptionerHandle {
  CaptionerKind kind = CaptionerKind::stub;
  std::string identifier;  // command line for external captioners
  std::uint64_t seed = 0;  // scene-bank seed for stubs
};

inline constexpr const char* kAbstainCaption = "a scene";
inline constexpr std::size_t kMaxCaptionTokens = 12;

class Captioner {
 public:
  virtual ~Captioner() = default;
  virtual Caption caption_video(const FrameTrack& track) const = 0;
  virtual Caption caption_image(const std::vector<double>& last_frame, double t) const = 0;
};

class StubCaptioner final : public Captioner {
 public:
  explicit StubCaptioner(std::vector<SceneProfile> bank);

  /// Mean of every frame in the window, classified against the scene means.
  Caption caption_video(const FrameTrack& track) const override;
  /// Only the final frame matters.
  Caption caption_image(const std::vector<double>& last_frame, double t) const override;

  /// Index of the nearest scene mean, or -1 for an all-zero feature.
  int nearest_scene(const std::vector<double>& feature) const;

 private:
  std::string sentence_for(const std::vector<double>& feature) const;
  std::vector<SceneProfile> bank_;
};

/// Runs `command <frames.arr> <caption.txt>`; the frames file is a named-array archive holding
/// one array "frames" (n x k) and one "timestamps" (n). The first output line is the caption.
class ExternalCaptioner final : public Captioner {
 public:
  ExternalCaptioner(std::string command, std::filesystem::path work_dir);

  Caption caption_video(const FrameTrack& track) const override;
  Caption caption_image(const std::vector<double>& last_frame, double t) const override;

 private:
  std::string run(const FrameTrack& track) const;

  std::string command_;
  std::filesystem::path work_dir_;
  mutable std::mutex mu_;  // one call at a time per handle
};

/// Builds a captioner from a handle. Stubs need the generator config to recover the scene bank.
std::unique_ptr<Captioner> make_captioner(const CaptionerHandle& handle, const GenConfig& config,
                                          const std::filesystem::path& work_dir = std::filesystem::temp_directory_path());

/// Captions the frames of `window` (video) and its final frame (image).
std::pair<Caption, Caption> caption_window(const Captioner& captioner, const FrameTrack& window_track);

}  // namespace mdug
