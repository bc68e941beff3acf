#pragma once

#include <memory>
#include <string>

#include "avsim/perception.hpp"
#include "avsim/world.hpp"

namespace avsim {

/// Ground-truth stand-in for the network: renders the scenario from the
/// frame's pose and time, then lifts the masks to one-hot logits. Boxes come
/// out exact with score 1.
class OracleBackend : public InferenceBackend {
 public:
  explicit OracleBackend(Scenario scenario)
      : scenario_(std::move(scenario)), renderer_(scenario_.camera) {}

  RawOutputs infer(const CameraFrame& frame) override {
    RenderOutput r = renderer_.render(scenario_, frame.pose, frame.timestamp);
    return {lift_one_hot(r.object_mask), lift_one_hot(r.drivable_mask), lift_one_hot(r.lane_mask),
            std::move(r.detections)};
  }

  std::string name() const override { return "oracle"; }

  const Scenario& scenario() const { return scenario_; }

 private:
  Scenario scenario_;
  Renderer renderer_;
};

}  // namespace avsim
