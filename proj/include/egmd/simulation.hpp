// SPDX-License-Identifier: Apache-2.0

#ifndef EGMD_SIMULATION_HPP
#define EGMD_SIMULATION_HPP

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "egmd/amr.hpp"
#include "egmd/config.hpp"
#include "egmd/egspace.hpp"
#include "egmd/flow.hpp"
#include "egmd/mesh.hpp"
#include "egmd/output.hpp"
#include "egmd/stabilization.hpp"
#include "egmd/transport.hpp"

namespace egmd
{

class SolverError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Everything one step produced, on the mesh the step was solved on (before adaptation).
struct StepState
{
  int step = 0;
  double time = 0.0;
  const QuadMesh *mesh = nullptr;
  const DofMap *dofs = nullptr;
  const Field *concentration = nullptr;  // C^{n+1}
  const Field *pressure = nullptr;       // P^{n+1}
  const FaceFlux *flux = nullptr;
  const ViscosityField *viscosity = nullptr;
  const std::vector<double> *conservation = nullptr;  // per cell, empty for analytic velocity
};

// Sequential pressure -> flux -> stabilization -> transport -> adapt loop of one scenario.
class Simulation
{
public:
  // Validates the config (ConfigError) and sets up the mesh and initial state.
  explicit Simulation(ScenarioConfig config);

  // One time step. Throws SolverError when GMRES does not converge.
  void step();
  bool done() const;
  int num_steps() const;

  const ScenarioConfig &config() const { return cfg_; }
  int step_index() const { return step_; }
  double time() const { return time_; }
  const QuadMesh &mesh() const { return mesh_; }
  const DofMap &dofs() const { return dofs_; }
  const Field &concentration() const { return c_; }
  const Field &pressure() const { return p_; }
  // Per active cell of the current mesh; transferred through adaptation.
  const std::vector<double> &mu_stab() const { return mu_stab_; }
  const std::vector<double> &indicator() const { return indicator_; }
  const std::vector<double> &permeability() const { return perm_; }
  const std::vector<StepDiagnostics> &history() const { return history_; }

  // Called after each transport solve, before adaptation.
  void on_solved(std::function<void(const StepState &)> fn) { observer_ = std::move(fn); }

  // Initial concentration of the scenario.
  double initial_concentration(const Point2 &x) const;

private:
  ScenarioConfig cfg_;
  QuadMesh mesh_;
  DofMap dofs_;
  Field c_, c_prev_, p_, p_prev_;
  std::vector<double> perm_, mu_stab_, indicator_;
  std::vector<Point2> centers_;
  FlowBC flow_bc_;
  TransportBC transport_bc_;
  SourceField sources_;
  std::vector<StepDiagnostics> history_;
  std::function<void(const StepState &)> observer_;
  int step_ = 0;
  double time_ = 0.0;

  void refresh_cell_data();
  void record(int gmres_flow, int gmres_transport, double conservation, double max_flux);
};

// Runs a scenario to completion, writing step_%06d.vtk every output_stride steps (the final
// step always) and diagnostics.csv into out_dir. Returns 0, 2 for config errors or 3 when a
// solver fails; in the last case the diagnostics so far and the current state are written.
int run(const ScenarioConfig &config, const std::string &out_dir,
        const std::function<void(const std::string &)> &log = {});

}  // namespace egmd

#endif  // EGMD_SIMULATION_HPP
