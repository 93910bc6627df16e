"""Scikit-learn style wrapper around extraction and simulation.

The model is physical: ``fit`` does not estimate parameters, it checks the
circuit and extracts the state-space matrices.  ``predict`` maps an input
matrix (one row per sample, one column per model input, ordered as
``input_labels_``) to the output temperatures.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_initial_state, check_input_matrix, check_method, check_positive
from .circuit import ThermalCircuit, build_dae, check_well_posed, validate
from .simulate import IntegratorConfig, integrate
from .statespace import extract_state_space

__all__ = ["ThermalNetworkRegressor"]


class ThermalNetworkRegressor(RegressorMixin, BaseEstimator):
    """Simulate a thermal circuit as a regressor from inputs to outputs.

    Parameters
    ----------
    circuit : ThermalCircuit
        Assembled circuit with at least one capacitive node.
    method : {"exact-zoh", "implicit-euler", "explicit-euler"}
    input_dt : float
        Sampling step of the rows of ``X``, seconds.
    dt : float, optional
        Simulation step; must divide ``input_dt``.
    initial_state : array-like, optional
        Defaults to the steady state under the first row of ``X``.
    allow_unstable : bool
        Let explicit Euler run above its stability limit.

    Attributes
    ----------
    state_space_ : StateSpace
    input_labels_, output_labels_ : tuple of str
    n_features_in_ : int
    """

    def __init__(
        self,
        circuit=None,
        method="exact-zoh",
        input_dt=600.0,
        dt=None,
        initial_state=None,
        allow_unstable=False,
    ):
        self.circuit = circuit
        self.method = method
        self.input_dt = input_dt
        self.dt = dt
        self.initial_state = initial_state
        self.allow_unstable = allow_unstable

    def fit(self, X=None, y=None):
        """Check the circuit and extract its state-space model.

        ``X`` and ``y`` are accepted for API compatibility; ``X``, when
        given, must match the number of model inputs.
        """
        if not isinstance(self.circuit, ThermalCircuit):
            raise TypeError(f"circuit must be a ThermalCircuit, got {type(self.circuit).__name__}")
        check_method(self.method)
        check_positive("input_dt", self.input_dt)
        check_positive("dt", self.dt, allow_none=True)
        validate(self.circuit).raise_for_errors()
        check_well_posed(self.circuit).raise_for_errors()
        ss = extract_state_space(build_dae(self.circuit), self.circuit)
        if X is not None:
            check_input_matrix(X, ss.n_inputs)
        check_initial_state(self.initial_state, ss.n_states)
        self.state_space_ = ss
        self.input_labels_ = tuple(ss.input_labels)
        self.output_labels_ = tuple(ss.output_labels)
        self.n_features_in_ = ss.n_inputs
        return self

    def _simulate(self, X):
        check_is_fitted(self, "state_space_")
        X = check_input_matrix(X, self.n_features_in_)
        cfg = IntegratorConfig(
            method=self.method,
            dt=self.dt,
            initial_state=check_initial_state(self.initial_state, self.state_space_.n_states),
            allow_unstable=self.allow_unstable,
        )
        return integrate(self.state_space_, X, cfg, input_dt=self.input_dt)

    def predict(self, X):
        """Output temperatures, shape (n_samples, n_outputs)."""
        return self._simulate(X).outputs

    def predict_states(self, X):
        """Capacitive-node temperatures, shape (n_samples, n_states)."""
        return self._simulate(X).states
