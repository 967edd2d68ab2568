"""
End-to-end secure measurement: state set -> minimum-error and inconclusive
measurements -> projective dilation -> preprocessing -> receiver, with every
exact check recorded as a residual.
"""

import logging
from typing import Dict, List, Optional

import numpy as np
import scipy

import state_discrimination
from state_discrimination import (
    AbelianGroup,
    AguStateSet,
    build_dilation,
    diag_character_rep,
    make_agu_set,
    make_rep,
    minimum_error,
    rep_from_generators,
    shift_rep,
    solve_oim,
    unamb_threshold,
    validate_povm,
    verify_dilation,
)
from state_discrimination.exceptions import MeasurementError
from state_discrimination.measurement import avg_correct
from state_discrimination.numerics import hermitian_part, partial_transpose

from .config import UNAMBIGUOUS, ProtocolSettings, RunConfig
from .exceptions import ConfigError
from .preprocessing import (
    SEPARABLE,
    build_bipartite_entangled,
    build_bipartite_separable,
    build_multipartite,
    preprocess,
)
from .receiver import receiver_povm
from .reporting import (
    AttackEntry,
    ExactSection,
    MetaSection,
    MonteCarloEntry,
    MonteCarloSection,
    ResidualEntry,
    RunReport,
)
from .simulation import RNG_ALGORITHM, attack_sim, monte_carlo
from .verification import check_secrecy, coalitions, direct_table, exact_table


def create_state_set(config: RunConfig, tol: Optional[float] = None) -> AguStateSet:
    """
    Builds the AGU set described by the config.

    Raises:
        SymmetryError: Matrices do not form a representation
        StateSetError: Invalid seed vectors
    """
    tol = tol or ProtocolSettings.resolve(config).tolerance
    group = AbelianGroup(tuple(config.group.orders))
    if config.rep.type == "shift":
        rep = shift_rep(group)
    elif config.rep.type == "diag":
        rep = diag_character_rep(group)
    else:
        matrices = config.rep.parsed_matrices()
        if len(matrices) == len(group.orders):
            rep = rep_from_generators(group, matrices, tol)
        else:
            rep = make_rep(group, matrices, tol)
    return make_agu_set(group, rep, config.seed_matrix(), tol)


class SecureMeasurementPipeline:
    def __init__(self, config: RunConfig, settings: Optional[ProtocolSettings] = None):
        self.config = config
        self.settings = settings or ProtocolSettings.resolve(config)
        self.logger = logging.getLogger(self.__class__.__name__)

        self.state_set = None
        self.failure_prob = None
        self.unamb = None
        self.me = None
        self.oim = None
        self.dilation = None
        self.dilation_report = None
        self.pmap = None
        self.receiver = None
        self.states = None

    @property
    def is_built(self) -> bool:
        return self.states is not None

    def resolve_failure_prob(self) -> float:
        if self.config.failure_prob == UNAMBIGUOUS:
            if self.unamb is None:
                raise ConfigError("failure_prob 'unambiguous' requires a pure state set")
            return self.unamb
        return float(self.config.failure_prob)

    def build(self) -> "SecureMeasurementPipeline":
        config = self.config
        tol = self.settings.tolerance

        self.state_set = create_state_set(config, tol)
        self.logger.info(
            f"State set: M={self.state_set.n_states}, D={self.state_set.dim}, R={self.state_set.rank}"
        )
        if self.state_set.is_pure:
            self.unamb = unamb_threshold(self.state_set)
        self.failure_prob = self.resolve_failure_prob()

        if not self.state_set.spans_space:
            raise MeasurementError("The protocol requires states that span the representation space")
        self.me = minimum_error(self.state_set, tol=config.tolerances.me_optimality)
        self.oim = solve_oim(
            self.state_set,
            self.failure_prob,
            restarts=config.solver.restarts,
            rng_seed=config.rng_seed,
            dominance_draws=config.solver.dominance_draws,
            me=self.me
        )

        self.dilation = build_dilation(self.state_set, self.oim, self.me.povm, tol)
        self.dilation_report = verify_dilation(self.dilation, self.state_set, self.oim)

        cap = self.settings.dimension_cap
        if config.preprocessing == SEPARABLE:
            self.pmap = build_bipartite_separable(self.dilation, dimension_cap=cap, tol=tol)
        elif config.observers == 2:
            self.pmap = build_bipartite_entangled(self.dilation, dimension_cap=cap, tol=tol)
        else:
            self.pmap = build_multipartite(self.dilation, config.observers, dimension_cap=cap, tol=tol)

        self.receiver = receiver_povm(self.pmap)
        self.states = preprocess(self.pmap, self.state_set, self.dilation)
        self.logger.info(f"Pipeline built on a {self.pmap.composite_dim}-dimensional composite")
        return self

    # ========================================================================
    # Exact checks
    # ========================================================================

    def exact_table(self) -> np.ndarray:
        return exact_table(self.states, self.receiver)

    def residuals(self) -> Dict[str, ResidualEntry]:
        tol = self.settings.tolerance
        tolerances = self.config.tolerances
        rep = self.state_set.rep
        residuals = {}

        residuals['state_covariance'] = ResidualEntry.check(self.state_set.covariance_violation(), tol)
        residuals['me_optimality'] = ResidualEntry.check(self.me.residual, tolerances.me_optimality)
        residuals['oim_validity'] = ResidualEntry.check(validate_povm(self.oim.povm, rep), tol)
        residuals['oim_constraint'] = ResidualEntry.check(
            abs(self.oim.p_achieved - self.oim.p_target), tolerances.oim_constraint
        )
        dominance = self.oim.certificate.dominance
        if dominance is not None:
            residuals['oim_dominance'] = ResidualEntry.check(max(dominance.max_excess, 0.0), tolerances.oim_constraint)

        for name, value in self.dilation_report.as_dict().items():
            residuals[f'dilation_{name}'] = ResidualEntry.check(value, tol)

        residuals['trace_preservation'] = ResidualEntry.check(self.pmap.trace_preservation_violation(), tol)
        if self.pmap.kind != SEPARABLE:
            residuals['isometry'] = ResidualEntry.check(self.pmap.isometry_violation(), tol)
        residuals['receiver_validity'] = ResidualEntry.check(self.receiver.validity_violation(), tol)

        table = self.exact_table()
        residuals['table_rows'] = ResidualEntry.check(float(np.abs(table.sum(axis=1) - 1.0).max()), tol)
        residuals['secrecy'] = ResidualEntry.check(
            check_secrecy(list(self.states), self.pmap.n_observers, self.pmap.local_dim), tol
        )
        residuals['equivalence'] = ResidualEntry.check(
            float(np.abs(table - direct_table(self.state_set, self.dilation)).max()), tol
        )
        if self.pmap.kind == SEPARABLE:
            residuals['ppt'] = ResidualEntry.check(self.ppt_violation(), tol)

        for name, entry in residuals.items():
            self.logger.debug(f"{name}: {entry.value:.3e} (tolerance {entry.tolerance:.0e})")
        return residuals

    def ppt_violation(self) -> float:
        worst = 0.0
        for rho in self.states:
            pt = hermitian_part(partial_transpose(rho, self.pmap.dims, [1]))
            worst = max(worst, -float(np.linalg.eigvalsh(pt).min()))
        return worst

    # ========================================================================
    # Sampling
    # ========================================================================

    def run_monte_carlo(self, trials: int, rng_seed: int) -> MonteCarloSection:
        if trials == 0:
            return MonteCarloSection(trials=0)
        group = self.state_set.group
        entries = []
        for m in group.elements:
            result = monte_carlo(self, m, trials, rng_seed)
            sigma = result.max_sigma_deviation()
            entries.append(MonteCarloEntry(
                message=group.label(m),
                counts=result.counts.tolist(),
                frequencies=result.frequencies.tolist(),
                standard_errors=result.standard_errors.tolist(),
                exact=result.exact.tolist(),
                tv_distance=result.tv_distance,
                max_sigma_deviation=None if np.isinf(sigma) else sigma
            ))
        return MonteCarloSection(trials=trials, entries=entries)

    def run_attacks(self, trials: int, rng_seed: int, strategy: str = "random") -> List[AttackEntry]:
        entries = []
        for subset in coalitions(self.pmap.n_observers):
            result = attack_sim(self, subset, strategy, trials, rng_seed)
            entries.append(AttackEntry(
                subset=list(result.subset),
                strategy=result.strategy,
                exact_tv=result.exact_tv,
                empirical_tv=result.empirical_tv,
                trials=trials
            ))
        return entries

    # ========================================================================
    # Report
    # ========================================================================

    def run(self, sample: bool = True) -> RunReport:
        """
        Executes the pipeline and collects the report.

        Args:
            sample: Run Monte Carlo and attack sampling (exact checks always run)
        """
        if not self.is_built:
            self.build()
        config = self.config
        group = self.state_set.group
        tol = self.settings.tolerance

        residuals = self.residuals()
        monte_carlo_section = MonteCarloSection()
        attacks = []
        if sample:
            monte_carlo_section = self.run_monte_carlo(config.trials, config.rng_seed)
            attacks = self.run_attacks(config.trials, config.rng_seed)
            if attacks:
                residuals['attack_leakage'] = ResidualEntry.check(max(a.exact_tv for a in attacks), tol)

        exact = ExactSection(
            messages=[group.label(m) for m in group.elements],
            outcomes=self.oim.povm.outcome_labels,
            probabilities=self.exact_table().tolist(),
            avg_correct=self.oim.correct_prob,
            avg_failure=self.oim.p_achieved,
            failure_target=self.failure_prob,
            unamb_threshold=self.unamb,
            me_correct=avg_correct(self.state_set, self.me.povm),
            oim_method=self.oim.certificate.method,
            me_method=self.me.method,
            failure_spectrum=[float(x) for x in self.oim.lam]
        )
        meta = MetaSection(
            version=state_discrimination.__version__,
            numpy_version=np.__version__,
            scipy_version=scipy.__version__,
            rng_algorithm=RNG_ALGORITHM,
            rng_seed=config.rng_seed,
            group_orders=list(group.orders),
            dimension=self.state_set.dim,
            rank=self.state_set.rank,
            observers=self.pmap.n_observers,
            preprocessing=self.pmap.kind,
            local_dim=self.pmap.local_dim,
            composite_dim=self.pmap.composite_dim
        )
        report = RunReport(
            exact=exact,
            monte_carlo=monte_carlo_section,
            attack=attacks,
            residuals=residuals,
            meta=meta
        )
        if report.passed:
            self.logger.info("All residuals within tolerance")
        else:
            self.logger.warning(f"Residuals out of tolerance: {', '.join(report.failing())}")
        return report


def run_pipeline(config: RunConfig, sample: bool = True) -> RunReport:
    return SecureMeasurementPipeline(config).run(sample=sample)
