#pragma once

// Pose-only linear Kalman filter for a surface vessel. Turning is predicted
// by feeding the filter an artificial input: the form drag that opposes the
// hull-lateral component of the estimated velocity. With zero lateral drag
// and no velocity/yaw-rate cross covariance the same filter degenerates to a
// constant-velocity (tangent-line) predictor, which serves as the baseline.

#include <Eigen/Dense>

#include <string_view>
#include <vector>

namespace deckchase::usv {

inline constexpr int kStateDim = 8;
inline constexpr int kMeasDim = 4;

using Vec8 = Eigen::Matrix<double, kStateDim, 1>;
using Mat8 = Eigen::Matrix<double, kStateDim, kStateDim>;
using Vec4 = Eigen::Matrix<double, kMeasDim, 1>;

enum StateIndex : int {
  kX = 0,
  kY = 1,
  kZ = 2,
  kEta = 3,
  kXDot = 4,
  kYDot = 5,
  kZDot = 6,
  kEtaDot = 7,
};

struct UsvState {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double eta = 0.0;  // heading, (-pi, pi]
  double xdot = 0.0;
  double ydot = 0.0;
  double zdot = 0.0;
  double etadot = 0.0;

  Vec8 to_vector() const;
  static UsvState from_vector(const Vec8& v);

  double horizontal_speed() const;
  bool finite() const;
};

struct DragParams {
  double mass = 100.0;  // kg
  double k_x = 0.0;     // along-hull drag, compensated by propulsion
  double k_y = 360.0;   // lateral form drag

  void validate() const;
};

// Diagonal variances plus one shared value for the four velocity/yaw-rate
// cross terms.
struct ProcessNoise {
  double sigma_x = 1e-4;
  double sigma_y = 1e-4;
  double sigma_z = 1e-4;
  double sigma_eta = 1e-4;
  double sigma_xdot = 1e-2;
  double sigma_ydot = 1e-2;
  double sigma_zdot = 1e-2;
  double sigma_etadot = 1e-2;
  double sigma_cross = 0.0;

  /// Default curvilinear noise; `correlation` scales sqrt(sigma_vel *
  /// sigma_etadot) to give the cross term.
  static ProcessNoise curvilinear(double correlation = -0.3);
  static ProcessNoise straight_line();

  Mat8 matrix() const;
  /// Throws InvalidConfig unless the assembled matrix is PSD.
  void validate() const;
};

struct PoseMeasurement {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double eta = 0.0;
};

struct PredictionHorizon {
  std::vector<UsvState> states;  // states[n] is at t0 + (n + 1) * dt_pred
  double dt_pred = 0.0;
  double t0 = 0.0;

  std::size_t size() const { return states.size(); }
  double time_of(std::size_t n) const { return t0 + static_cast<double>(n + 1) * dt_pred; }
};

struct RotationPair {
  Eigen::Matrix2d body_from_world;
  Eigen::Matrix2d world_from_body;
};

/// Planar rotation under the small pitch/roll assumption.
RotationPair body_world_rotation(double eta);

/// World-frame acceleration produced by hull drag at the state's velocity.
Eigen::Vector2d drag_input(const UsvState& state, const DragParams& drag);

Mat8 transition_matrix(double dt);
Eigen::Matrix<double, kStateDim, 2> input_matrix(double dt);

/// One step of the mean dynamics, drag input regenerated from `state`.
UsvState propagate_mean(const UsvState& state, const DragParams& drag, double dt);

enum class EstimatorMode { kCurvilinear, kStraightLine };

std::string_view to_string(EstimatorMode mode);
/// Accepts "curvitrack" / "curvilinear" and "baseline" / "linear".
EstimatorMode parse_estimator_mode(std::string_view name);

struct FilterConfig {
  DragParams drag;
  ProcessNoise noise = ProcessNoise::curvilinear();
  Vec4 meas_var = (Vec4() << 0.05 * 0.05, 0.05 * 0.05, 0.05 * 0.05, 0.02 * 0.02).finished();
  double dt = 1.0 / 30.0;  // nominal sampling period; Q is defined per nominal step
  double init_pose_var = 1.0;
  double init_vel_var = 4.0;

  static FilterConfig for_mode(EstimatorMode mode);
  void validate() const;
};

class UsvFilter {
 public:
  explicit UsvFilter(FilterConfig config);

  bool initialized() const { return initialized_; }
  void initialize(const PoseMeasurement& z);

  /// Time update over the nominal sampling period.
  void predict();
  /// Time update over `dt`; process noise is scaled by dt / nominal dt.
  void predict(double dt);

  /// Measurement update. Returns false and leaves the filter untouched when
  /// the measurement is older than the last accepted one.
  bool update(const PoseMeasurement& z);

  /// Initializes on the first call; afterwards predicts up to z.t and updates.
  bool process(const PoseMeasurement& z);

  const UsvState& state() const { return state_; }
  const Mat8& covariance() const { return covariance_; }
  const FilterConfig& config() const { return config_; }
  double time() const { return time_; }
  double last_measurement_time() const { return last_measurement_t_; }
  /// Smallest covariance eigenvalue observed after any predict/update.
  double min_eigenvalue_seen() const { return min_eigenvalue_seen_; }

  void reset_state(const UsvState& state, const Mat8& covariance, double t);

 private:
  void check_covariance();

  FilterConfig config_;
  Mat8 q_nominal_;
  UsvState state_;
  Mat8 covariance_ = Mat8::Identity();
  double time_ = 0.0;
  double last_measurement_t_ = -1e300;
  double min_eigenvalue_seen_ = 1e300;
  bool initialized_ = false;
};

/// Rolls the filter mean forward `steps` times at `dt_pred`, regenerating
/// the drag input from every predicted state. The filter is not modified.
PredictionHorizon predict_horizon(const UsvFilter& filter, int steps, double dt_pred);

/// Same, but first advances the mean from the filter time to `t_anchor`.
PredictionHorizon predict_horizon(const UsvFilter& filter, int steps, double dt_pred,
                                  double t_anchor);

}  // namespace deckchase::usv
