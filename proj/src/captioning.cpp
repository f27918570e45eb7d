#include "mdug/captioning.hpp"

#include <cstdlib>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "mdug/params.hpp"

namespace mdug {

StubCaptioner::StubCaptioner(std::vector<SceneProfile> bank) : bank_(std::move(bank)) {
  if (bank_.empty()) throw std::invalid_argument("StubCaptioner: empty scene bank");
}

int StubCaptioner::nearest_scene(const std::vector<double>& feature) const {
  bool all_zero = true;
  for (double v : feature) all_zero = all_zero && v == 0.0;
  if (all_zero) return -1;
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < bank_.size(); ++s) {
    if (bank_[s].mean.size() != feature.size()) throw std::invalid_argument("StubCaptioner: feature dimension mismatch");
    double d = 0.0;
    for (std::size_t j = 0; j < feature.size(); ++j) d += (feature[j] - bank_[s].mean[j]) * (feature[j] - bank_[s].mean[j]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(s);
    }
  }
  return best;
}

std::string StubCaptioner::sentence_for(const std::vector<double>& feature) const {
  const int s = nearest_scene(feature);
  if (s < 0) return kAbstainCaption;
  return "people talk in the " + bank_[static_cast<std::size_t>(s)].keywords[0] + " scene";
}

Caption StubCaptioner::caption_video(const FrameTrack& track) const {
  if (track.empty()) throw std::invalid_argument("caption_video: empty frame track");
  std::vector<double> mean(track.front().feature.size(), 0.0);
  for (const auto& f : track) {
    if (f.feature.size() != mean.size()) throw std::invalid_argument("caption_video: inconsistent frame dimension");
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += f.feature[j];
  }
  for (double& v : mean) v /= static_cast<double>(track.size());
  return {sentence_for(mean), CaptionSource::video, track.front().t, track.back().t};
}

Caption StubCaptioner::caption_image(const std::vector<double>& last_frame, double t) const {
  if (last_frame.empty()) throw std::invalid_argument("caption_image: empty frame");
  return {sentence_for(last_frame), CaptionSource::image, t, t};
}

ExternalCaptioner::ExternalCaptioner(std::string command, std::filesystem::path work_dir)
    : command_(std::move(command)), work_dir_(std::move(work_dir)) {
  if (command_.empty()) throw std::invalid_argument("ExternalCaptioner: empty command");
}

std::string ExternalCaptioner::run(const FrameTrack& track) const {
  if (track.empty()) throw std::invalid_argument("external captioner: empty frame track");
  std::lock_guard lock(mu_);
  const auto k = track.front().feature.size();
  NamedArray frames{"frames", {track.size(), k}, {}};
  NamedArray stamps{"timestamps", {track.size()}, {}};
  for (const auto& f : track) {
    if (f.feature.size() != k) throw std::invalid_argument("external captioner: inconsistent frame dimension");
    for (double v : f.feature) frames.data.push_back(static_cast<float>(v));
    stamps.data.push_back(static_cast<float>(f.t));
  }
  std::filesystem::create_directories(work_dir_);
  const auto in = work_dir_ / "captioner_frames.arr";
  const auto out = work_dir_ / "captioner_output.txt";
  write_archive(in, {frames, stamps});
  std::filesystem::remove(out);
  const std::string cmd = command_ + " '" + in.string() + "' '" + out.string() + "'";
  if (std::system(cmd.c_str()) != 0) throw std::runtime_error("external captioner failed: " + command_);
  std::ifstream result(out);
  std::string line;
  if (!result || !std::getline(result, line)) throw std::runtime_error("external captioner produced no caption: " + command_);
  return join_tokens(tokenize(line));
}

Caption ExternalCaptioner::caption_video(const FrameTrack& track) const {
  return {run(track), CaptionSource::video, track.front().t, track.back().t};
}

Caption ExternalCaptioner::caption_image(const std::vector<double>& last_frame, double t) const {
  return {run({TimedFrame{t, last_frame}}), CaptionSource::image, t, t};
}

std::unique_ptr<Captioner> make_captioner(const CaptionerHandle& handle, const GenConfig& config,
                                          const std::filesystem::path& work_dir) {
  if (handle.kind == CaptionerKind::external) return std::make_unique<ExternalCaptioner>(handle.identifier, work_dir);
  GenConfig c = config;
  c.bank_seed = handle.seed;
  return std::make_unique<StubCaptioner>(scene_bank(c));
}

std::pair<Caption, Caption> caption_window(const Captioner& captioner, const FrameTrack& window_track) {
  if (window_track.empty()) throw std::invalid_argument("caption_window: empty frame track");
  return {captioner.caption_video(window_track),
          captioner.caption_image(window_track.back().feature, window_track.back().t)};
}

}  // namespace mdug
