#pragma once

#include <string>
#include <vector>

#include "rlx/gridworld.hpp"
#include "rlx/qnetwork.hpp"

namespace rlx {

enum class Method { SM = 0, IG = 1, SG = 2, OC1 = 3, SARFA = 4 };

const char* method_name(Method m);
bool method_from_name(const std::string& name, Method* out);
std::vector<Method> all_methods();

struct MethodParams {
  int ig_steps = 50;        // Riemann steps for integrated gradients
  int sg_samples = 50;      // noise samples for SmoothGrad
  double sg_sigma = -1.0;   // < 0: 0.15 * (max - min) of the state tensor
  double baseline = 0.0;    // occlusion / IG baseline value
  int occlusion_n = 1;      // cells perturbed together by occlusion
  uint64_t seed = 0;        // SmoothGrad noise stream
};

// Disjoint groups of feature indices scored together by the perturbation
// methods. The default partition has one single-cell part per active
// (value 1) non-wall feature of the current frame.
struct Partition {
  std::vector<std::vector<int>> parts;

  // Throws OverlappingPartsError if a feature occurs in more than one part.
  void validate(int feature_count) const;
};

Partition default_partition(const GridState& s);

// Scores over the full stacked feature tensor. Features outside the scored
// set (for perturbation methods: outside the partition) are zero.
struct AttributionMap {
  Method method = Method::SM;
  QoI qoi;
  int width = 0;
  int height = 0;
  std::vector<double> scores;  // kStateChannels * height * width
};

// Single-method dispatch; SARFA ignores qoi.stage (it is defined on the
// softmax output and reported as post-softmax).
AttributionMap attribute(const QNetwork& net, const GridState& state,
                         Method method, const QoI& qoi,
                         const MethodParams& params = {});

// All four action QoIs at a fixed stage in one pass. For perturbation
// methods this shares the forward passes across actions, which is what the
// behavior-map construction needs.
std::array<AttributionMap, kNumActions> attribute_all_actions(
    const QNetwork& net, const GridState& state, Method method, Stage stage,
    const MethodParams& params = {});

// The individual methods, exposed for tests. `input` is the flattened
// stacked state tensor.
std::vector<double> saliency_scores(const QNetwork& net,
                                    std::span<const double> input,
                                    const QoI& qoi);
std::vector<double> integrated_gradient_scores(const QNetwork& net,
                                               std::span<const double> input,
                                               const QoI& qoi, int steps,
                                               double baseline);
std::vector<double> smoothgrad_scores(const QNetwork& net,
                                      std::span<const double> input,
                                      const QoI& qoi, int samples,
                                      double sigma, uint64_t seed);
std::vector<double> occlusion_scores(const QNetwork& net,
                                     std::span<const double> input,
                                     const Partition& partition,
                                     const QoI& qoi, double baseline);
std::vector<double> sarfa_scores(const QNetwork& net,
                                 std::span<const double> input,
                                 const Partition& partition, Action action,
                                 double baseline);

// SARFA specificity/relevance kernel for one perturbation, exposed for the
// reference tests: q / q_pert are Q-vectors of any length >= 2.
double sarfa_score(std::span<const double> q, std::span<const double> q_pert,
                   int action);

}  // namespace rlx
