#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stackrl/datasets.hpp"
#include "stackrl/environments.hpp"
#include "stackrl/experiments.hpp"
#include "stackrl/gradients.hpp"
#include "stackrl/learner.hpp"

namespace py = pybind11;
using namespace stackrl;

namespace {

const ActionNoise* noise_ptr(const std::optional<ActionNoise>& z) {
  return z.has_value() ? &z.value() : nullptr;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stackelberg batch policy learning core";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<ActionSpace>(m, "ActionSpace")
      .def_static("discrete", &ActionSpace::make_discrete, py::arg("cardinality"))
      .def_static("box", &ActionSpace::make_box, py::arg("lower"), py::arg("upper"))
      .def_property_readonly("is_discrete", &ActionSpace::discrete)
      .def_property_readonly("dim", &ActionSpace::dim)
      .def_readonly("cardinality", &ActionSpace::cardinality);

  py::class_<FeatureMap>(m, "FeatureMap")
      .def_static("polynomial", &FeatureMap::polynomial, py::arg("degree"), py::arg("state_dim"),
                  py::arg("action_space"), py::arg("state_lower"), py::arg("state_upper"))
      .def_static("random_fourier", &FeatureMap::random_fourier, py::arg("count"),
                  py::arg("bandwidth"), py::arg("seed"), py::arg("state_dim"),
                  py::arg("action_space"), py::arg("state_lower"), py::arg("state_upper"))
      .def_property_readonly("dim", &FeatureMap::dim)
      .def_property_readonly("scale", &FeatureMap::scale)
      .def("features",
           py::overload_cast<const Eigen::VectorXd&, int>(&FeatureMap::features, py::const_),
           py::arg("s"), py::arg("a"))
      .def("features",
           py::overload_cast<const Eigen::VectorXd&, const Eigen::VectorXd&>(
               &FeatureMap::features, py::const_),
           py::arg("s"), py::arg("a"));

  py::class_<LinearQ>(m, "LinearQ")
      .def(py::init([](Eigen::VectorXd theta, double c_theta, double v_max) {
             return LinearQ{std::move(theta), c_theta, v_max};
           }),
           py::arg("theta"), py::arg("c_theta"), py::arg("v_max"))
      .def_readwrite("theta", &LinearQ::theta)
      .def_readwrite("c_theta", &LinearQ::c_theta)
      .def_readwrite("v_max", &LinearQ::v_max);

  py::class_<SoftmaxPolicy>(m, "SoftmaxPolicy")
      .def(py::init([](Eigen::VectorXd omega, double c_omega) {
             return SoftmaxPolicy{std::move(omega), c_omega};
           }),
           py::arg("omega"), py::arg("c_omega") = 100.0)
      .def_readwrite("omega", &SoftmaxPolicy::omega)
      .def_readwrite("c_omega", &SoftmaxPolicy::c_omega);

  py::class_<GaussianLinearPolicy>(m, "GaussianLinearPolicy")
      .def(py::init([](Eigen::MatrixXd mean, Eigen::VectorXd log_std, double c_omega) {
             return GaussianLinearPolicy{std::move(mean), std::move(log_std), c_omega};
           }),
           py::arg("mean_matrix"), py::arg("log_std"), py::arg("c_omega") = 100.0)
      .def_readwrite("mean_matrix", &GaussianLinearPolicy::mean_matrix)
      .def_readwrite("log_std", &GaussianLinearPolicy::log_std);

  m.def("project_ball", &project_ball, py::arg("v"), py::arg("radius"));
  m.def("q_value",
        py::overload_cast<const LinearQ&, const FeatureMap&, const Eigen::VectorXd&, int>(
            &q_value),
        py::arg("q"), py::arg("map"), py::arg("s"), py::arg("a"));
  m.def("policy_probs", &policy_probs, py::arg("policy"), py::arg("map"), py::arg("s"));
  m.def("score", &score, py::arg("policy"), py::arg("map"), py::arg("s"), py::arg("a"));
  m.def(
      "q_expected",
      [](const LinearQ& q, const FeatureMap& map, const PolicyHandle& policy,
         const Eigen::VectorXd& s, const std::optional<ActionNoise>& z) {
        return q_expected(q, map, policy, s, noise_ptr(z));
      },
      py::arg("q"), py::arg("map"), py::arg("policy"), py::arg("s"),
      py::arg("z") = std::nullopt);

  py::class_<KernelSpec>(m, "KernelSpec")
      .def_static("rbf", &KernelSpec::rbf, py::arg("bandwidth"), py::arg("c_k") = 1.0)
      .def_static("linear", &KernelSpec::linear, py::arg("c_k") = 1.0)
      .def_readonly("bandwidth", &KernelSpec::bandwidth);
  m.def("kernel_eval", &kernel_eval, py::arg("spec"), py::arg("f1"), py::arg("f2"));
  m.def("gram", &gram, py::arg("spec"), py::arg("features"));
  m.def("median_bandwidth", &median_bandwidth, py::arg("features"), py::arg("seed") = 0);

  py::class_<Transition>(m, "Transition")
      .def(py::init<>())
      .def_readwrite("s", &Transition::s)
      .def_readwrite("a", &Transition::a)
      .def_readwrite("r", &Transition::r)
      .def_readwrite("s_next", &Transition::s_next)
      .def_readwrite("done", &Transition::done);

  py::class_<InitialStateSet>(m, "InitialStateSet")
      .def(py::init<>())
      .def_readwrite("states", &InitialStateSet::states);

  py::class_<OfflineDataset>(m, "OfflineDataset")
      .def(py::init<>())
      .def_readwrite("transitions", &OfflineDataset::transitions)
      .def_readwrite("initial_states", &OfflineDataset::initial_states)
      .def_readwrite("env_kind", &OfflineDataset::env_kind)
      .def_readwrite("gamma", &OfflineDataset::gamma)
      .def_property_readonly("n", &OfflineDataset::size);
  m.def("save_dataset", &save_dataset, py::arg("data"), py::arg("path"));
  m.def("load_dataset", &load_dataset, py::arg("path"));

  m.def(
      "kernel_bellman_loss",
      [](const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
         const OfflineDataset& data, const KernelSpec& kernel, double gamma,
         const std::optional<ActionNoise>& z) {
        return kernel_bellman_loss(map, q, policy, data, kernel, gamma, noise_ptr(z));
      },
      py::arg("map"), py::arg("q"), py::arg("policy"), py::arg("data"), py::arg("kernel"),
      py::arg("gamma"), py::arg("z") = std::nullopt);
  m.def(
      "leader_value",
      [](const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
         const InitialStateSet& init, const std::optional<ActionNoise>& z) {
        return leader_value(map, q, policy, init, noise_ptr(z));
      },
      py::arg("map"), py::arg("q"), py::arg("policy"), py::arg("init"),
      py::arg("z") = std::nullopt);
  m.def(
      "follower_loss",
      [](const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
         const OfflineDataset& data, const KernelSpec& kernel, double gamma, double lambda,
         const InitialStateSet& init, const std::optional<ActionNoise>& z) {
        return follower_loss(map, q, policy, data, kernel, gamma, lambda, init, noise_ptr(z));
      },
      py::arg("map"), py::arg("q"), py::arg("policy"), py::arg("data"), py::arg("kernel"),
      py::arg("gamma"), py::arg("lambda_"), py::arg("init"), py::arg("z") = std::nullopt);

  py::class_<GradientBundle>(m, "GradientBundle")
      .def_readonly("d_pi_j", &GradientBundle::d_pi_j)
      .def_readonly("d_q_j", &GradientBundle::d_q_j)
      .def_readonly("d_q_l", &GradientBundle::d_q_l)
      .def_readonly("d_pi_l", &GradientBundle::d_pi_l)
      .def_readonly("hess_q_l", &GradientBundle::hess_q_l)
      .def_readonly("cross_q_pi_l", &GradientBundle::cross_q_pi_l)
      .def_readonly("total_dj", &GradientBundle::total_dj)
      .def_readonly("beta_used", &GradientBundle::beta_used);
  m.def(
      "compute_bundle",
      [](const FeatureMap& map, const LinearQ& q, const PolicyHandle& policy,
         const OfflineDataset& data, const KernelSpec& kernel, double gamma, double lambda,
         const InitialStateSet& init, const std::optional<ActionNoise>& z) {
        return compute_bundle(map, q, policy, data, kernel, gamma, lambda, init, noise_ptr(z));
      },
      py::arg("map"), py::arg("q"), py::arg("policy"), py::arg("data"), py::arg("kernel"),
      py::arg("gamma"), py::arg("lambda_"), py::arg("init"), py::arg("z") = std::nullopt);
  m.def("regularized_solve", &regularized_solve, py::arg("hess"), py::arg("beta"), py::arg("v"),
        py::arg("solve_tol") = 1e-8);

  py::class_<LearnerConfig>(m, "LearnerConfig")
      .def(py::init<>())
      .def_readwrite("lambda_", &LearnerConfig::lambda)
      .def_readwrite("c1", &LearnerConfig::c1)
      .def_readwrite("a1", &LearnerConfig::a1)
      .def_readwrite("c2", &LearnerConfig::c2)
      .def_readwrite("a2", &LearnerConfig::a2)
      .def_readwrite("iterations", &LearnerConfig::iterations)
      .def_readwrite("minibatch", &LearnerConfig::minibatch)
      .def_readwrite("seed", &LearnerConfig::seed)
      .def_readwrite("eval_every", &LearnerConfig::eval_every)
      .def_readwrite("m_act", &LearnerConfig::m_act);
  m.def("step_sizes", &step_sizes, py::arg("k"), py::arg("config"));

  py::class_<TraceRow>(m, "TraceRow")
      .def_readonly("k", &TraceRow::k)
      .def_readonly("leader_value", &TraceRow::leader_value)
      .def_readonly("follower_loss", &TraceRow::follower_loss)
      .def_readonly("total_dj_norm", &TraceRow::total_dj_norm)
      .def_readonly("grad_q_l_norm", &TraceRow::grad_q_l_norm);
  py::class_<TrainTrace>(m, "TrainTrace").def_readonly("rows", &TrainTrace::rows);
  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("policy", &TrainResult::policy)
      .def_readonly("q", &TrainResult::q)
      .def_readonly("trace", &TrainResult::trace);
  m.def("train", &train, py::arg("map"), py::arg("data"), py::arg("init"), py::arg("kernel"),
        py::arg("policy0"), py::arg("q0"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());

  py::class_<Sim2dEnv>(m, "Sim2dEnv").def(py::init<>());
  py::class_<CartPoleEnv>(m, "CartPoleEnv").def(py::init<>());
  py::class_<QuadraticRewardEnv>(m, "QuadraticRewardEnv")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def_property_readonly("w", &QuadraticRewardEnv::w)
      .def_property_readonly("m", &QuadraticRewardEnv::m)
      .def("optimal_policy", &QuadraticRewardEnv::optimal_policy)
      .def("behavior", &QuadraticRewardEnv::behavior, py::arg("sigma0"));
  m.def("exact_regret_quadratic", &exact_regret_quadratic, py::arg("env"), py::arg("policy"));
  m.def("make_env", &make_env, py::arg("kind"), py::arg("env_seed") = 0);
  m.def("default_feature_map", &default_feature_map, py::arg("env"), py::arg("degree") = 2);
  m.def("default_v_max", &default_v_max, py::arg("env"));

  py::class_<McStats>(m, "McStats")
      .def_readonly("mean", &McStats::mean)
      .def_readonly("stddev", &McStats::stddev)
      .def_readonly("episodes", &McStats::episodes)
      .def("stderr_mean", &McStats::stderr_mean);
  m.def("mc_return", &mc_return, py::arg("env"), py::arg("policy"), py::arg("map"),
        py::arg("gamma"), py::arg("episodes"), py::arg("horizon"), py::arg("seed"),
        py::call_guard<py::gil_scoped_release>());

  m.def("behavior_softmax", &behavior_softmax, py::arg("env"), py::arg("map"), py::arg("alpha"),
        py::arg("fqi_rounds"), py::arg("seed"));
  m.def("behavior_gaussian", &behavior_gaussian, py::arg("env"), py::arg("sigma0"));
  m.def("generate", &generate, py::arg("env"), py::arg("behavior"), py::arg("map"), py::arg("n"),
        py::arg("seed"), py::arg("m_init") = 64, py::call_guard<py::gil_scoped_release>());

  py::class_<RcnReport>(m, "RcnReport")
      .def_readonly("rcn", &RcnReport::rcn)
      .def_readonly("kappa", &RcnReport::kappa);
  m.def("rcn_from_moments", &rcn_from_moments, py::arg("sigma_pi"), py::arg("sigma_mu"));
  m.def("relative_condition_number", &relative_condition_number, py::arg("data"),
        py::arg("target"), py::arg("env"), py::arg("map"), py::arg("rollouts"), py::arg("seed"));

  py::class_<DSEReport>(m, "DSEReport")
      .def_readonly("grad_norm_leader", &DSEReport::grad_norm_leader)
      .def_readonly("grad_norm_follower", &DSEReport::grad_norm_follower)
      .def_readonly("leader_curvature_max_eig", &DSEReport::leader_curvature_max_eig)
      .def_readonly("follower_hessian_min_eig", &DSEReport::follower_hessian_min_eig)
      .def_readonly("is_dse", &DSEReport::is_dse)
      .def_readonly("j_s_eigenvalues", &DSEReport::j_s_eigenvalues);

  py::class_<QuadraticGame>(m, "QuadraticGame")
      .def("equilibrium", &QuadraticGame::equilibrium)
      .def("leader_curvature", &QuadraticGame::leader_curvature)
      .def("total_leader_grad", &QuadraticGame::total_leader_grad, py::arg("x1"), py::arg("x2"));
  m.def("make_convergent_game", &make_convergent_game, py::arg("seed"), py::arg("d1"),
        py::arg("d2"));
  m.def("make_saddle_game", &make_saddle_game, py::arg("seed"), py::arg("d2"));
  py::class_<GameTrajectory>(m, "GameTrajectory")
      .def_readonly("x1_final", &GameTrajectory::x1_final)
      .def_readonly("x2_final", &GameTrajectory::x2_final)
      .def_readonly("steps", &GameTrajectory::steps);
  m.def("run_quadratic_game", &run_quadratic_game, py::arg("game"), py::arg("config"),
        py::arg("noise_std"), py::arg("x1_0"), py::arg("x2_0"), py::arg("store_every") = 1);
  m.def("dse_check_game", &dse_check_game, py::arg("game"), py::arg("x1"), py::arg("x2"),
        py::arg("tol_g") = 1e-4, py::arg("tol_c") = 1e-6);

  m.def("lambda_schedule", &lambda_schedule, py::arg("n"), py::arg("v_max"), py::arg("scale"));
  py::class_<SlopeFit>(m, "SlopeFit")
      .def_readonly("slope", &SlopeFit::slope)
      .def_readonly("intercept", &SlopeFit::intercept)
      .def_readonly("degenerate", &SlopeFit::degenerate);
  m.def("fit_loglog_slope", &fit_loglog_slope, py::arg("ns"), py::arg("values"));
}
