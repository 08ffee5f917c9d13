#include "trace/tasks.hpp"

#include <stdexcept>

namespace trace {

TaskKind task_from_string(const std::string& name) {
  if (name == "inpaint50") return TaskKind::inpaint50;
  if (name == "inpaint70") return TaskKind::inpaint70;
  if (name == "sr2") return TaskKind::sr2;
  if (name == "sr4") return TaskKind::sr4;
  if (name == "motion") return TaskKind::motion;
  if (name == "nonlinear") return TaskKind::nonlinear;
  if (name == "ct_sparse") return TaskKind::ct_sparse;
  if (name == "ct_limited") return TaskKind::ct_limited;
  throw std::invalid_argument("unknown task: " + name);
}

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::inpaint50: return "inpaint50";
    case TaskKind::inpaint70: return "inpaint70";
    case TaskKind::sr2: return "sr2";
    case TaskKind::sr4: return "sr4";
    case TaskKind::motion: return "motion";
    case TaskKind::nonlinear: return "nonlinear";
    case TaskKind::ct_sparse: return "ct_sparse";
    case TaskKind::ct_limited: return "ct_limited";
  }
  throw std::logic_error("unknown task kind");
}

ForwardOperator make_task_operator(const TaskSpec& task, int channels, int h, int w) {
  switch (task.kind) {
    case TaskKind::inpaint50:
    case TaskKind::inpaint70: {
      const double def = task.kind == TaskKind::inpaint50 ? 0.5 : 0.7;
      const double frac = task.missing_fraction > 0.0 ? task.missing_fraction : def;
      return make_inpaint(h, w, frac, task.seed, channels);
    }
    case TaskKind::sr2: return make_downsample(2, h, w, channels);
    case TaskKind::sr4: return make_downsample(4, h, w, channels);
    case TaskKind::motion: return make_motion_blur(h, w, channels);
    case TaskKind::nonlinear: return make_anisotropic_blur(h, w, channels);
    case TaskKind::ct_sparse: {
      if (channels != 1 || h != w)
        throw std::invalid_argument("ct tasks need square single-channel images");
      const int views = task.views > 0 ? task.views : 60;
      std::vector<double> angles(static_cast<size_t>(views));
      for (int i = 0; i < views; ++i) angles[static_cast<size_t>(i)] = i * (180.0 / views);
      return make_radon(h, std::move(angles));
    }
    case TaskKind::ct_limited: {
      if (channels != 1 || h != w)
        throw std::invalid_argument("ct tasks need square single-channel images");
      const int views = task.views > 0 ? task.views : 120;
      std::vector<double> angles(static_cast<size_t>(views));
      for (int i = 0; i < views; ++i) angles[static_cast<size_t>(i)] = i * 1.0;
      return make_radon(h, std::move(angles));
    }
  }
  throw std::logic_error("unknown task kind");
}

Degraded degrade(const TaskSpec& task, const Tensor& x_true) {
  if (x_true.shape.size() != 3) throw std::invalid_argument("degrade: expected [C,H,W]");
  for (float v : x_true.data)
    if (v < 0.f || v > 1.f) throw std::invalid_argument("degrade: ground truth outside [0,1]");
  Degraded d{Tensor({1}), make_task_operator(task, x_true.shape[0], x_true.shape[1],
                                             x_true.shape[2])};
  d.y = d.op.apply(x_true);
  return d;
}

}  // namespace trace
