"""scikit-learn compatible estimators wrapping the functional core.

Each estimator stores only its hyper-parameters in ``__init__`` and
learns ``params_`` (plus a ``report_`` of per-epoch telemetry) in
``fit``, so ``get_params``/``set_params``, ``clone`` and pipelines work
as usual.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import crbm as _crbm
from . import dbn as _dbn
from . import exact as _exact
from . import gibbs as _gibbs
from . import hopfield as _hopfield
from .model import TrainConfig, UnitFamily, rng_stream
from .trainer import train_bm, train_rbm
from .units import cond_mean_hidden, cond_mean_visible
from .validation import check_family, check_layer_sizes, seed_from


class _CDMixin:
    def _config(self, seed):
        return TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            cd_steps=self.cd_steps,
            max_epochs=self.n_epochs,
            init_scale=self.init_scale,
            seed=seed,
            convergence_tol=self.convergence_tol,
            momentum=self.momentum,
            weight_decay=self.weight_decay,
        )


class RBM(_CDMixin, TransformerMixin, BaseEstimator):
    """Restricted Boltzmann machine trained with contrastive divergence.

    Parameters
    ----------
    n_components : int, default=2
        Number of hidden units.
    visible_family, hidden_family : {"binary", "gaussian", "poisson"}
        Unit families of the two layers.
    learning_rate : float, default=0.1
    batch_size : int, default=10
        Mini-batch size; must not exceed the number of samples.
    cd_steps : int, default=1
        Gibbs sweeps per contrastive-divergence estimate.
    n_epochs : int, default=100
    init_scale : float, default=0.01
        Standard deviation of the initial weights.
    convergence_tol : float, default=0.0
        Stop once an epoch's largest update norm falls below this.
    momentum, weight_decay : float, default=0.0
    poisson_total : float, default=1.0
        Multiplier on the softmax rates of Poisson units.
    random_state : int or None
        Seed of every RNG stream used in ``fit``.

    Attributes
    ----------
    params_ : RbmParams
    report_ : TrainReport
    components_ : ndarray of shape (n_components, n_features)
    intercept_visible_, intercept_hidden_ : ndarray
    """

    def __init__(self, n_components=2, visible_family="binary", hidden_family="binary",
                 learning_rate=0.1, batch_size=10, cd_steps=1, n_epochs=100, init_scale=0.01,
                 convergence_tol=0.0, momentum=0.0, weight_decay=0.0, poisson_total=1.0,
                 random_state=0):
        self.n_components = n_components
        self.visible_family = visible_family
        self.hidden_family = hidden_family
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.cd_steps = cd_steps
        self.n_epochs = n_epochs
        self.init_scale = init_scale
        self.convergence_tol = convergence_tol
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.poisson_total = poisson_total
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_family(X, self.visible_family)
        self.seed_ = seed_from(self.random_state)
        self.params_, self.report_ = train_rbm(
            self._config(self.seed_), X, self.n_components, self.hidden_family,
            visible_family=self.visible_family, poisson_total=self.poisson_total,
        )
        self.n_features_in_ = X.shape[1]
        return self

    @property
    def components_(self):
        return self.params_.W.T

    @property
    def intercept_visible_(self):
        return self.params_.b

    @property
    def intercept_hidden_(self):
        return self.params_.c

    def transform(self, X):
        """Hidden conditional means ``E[h | v]``."""
        check_is_fitted(self, "params_")
        X = check_family(X, self.params_.visible_family, allow_empty=True)
        return cond_mean_hidden(self.params_, X)

    def inverse_transform(self, H):
        check_is_fitted(self, "params_")
        return cond_mean_visible(self.params_, np.atleast_2d(np.asarray(H, dtype=np.float64)))

    def gibbs(self, X, k=1, random_state=None):
        """Visible states after ``k`` block Gibbs sweeps from ``X``."""
        check_is_fitted(self, "params_")
        X = check_family(X, self.params_.visible_family)
        rng = rng_stream(seed_from(random_state))
        return _gibbs.gibbs_chain(self.params_, X, k, rng).v

    def sample(self, n_samples, burn_in=100, thin=1, random_state=None):
        check_is_fitted(self, "params_")
        rng = rng_stream(seed_from(random_state))
        return _gibbs.generate(self.params_, n_samples, burn_in, thin, rng).rows

    def score_samples(self, X):
        """Exact ``log P(v)`` per row (binary models within the enumeration cap)."""
        check_is_fitted(self, "params_")
        X = check_family(X, UnitFamily.BINARY)
        log_z = _exact.log_partition(self.params_)
        return _exact._log_unnorm_marginal(self.params_, X) - log_z

    def score(self, X, y=None):
        return float(np.mean(self.score_samples(X)))


class BoltzmannMachine(RBM):
    """Binary Boltzmann machine with visible-visible and hidden-hidden links.

    ``learn_lateral=False`` keeps the lateral links at zero, which makes
    ``fit`` identical to :class:`RBM` with the same settings.
    """

    def __init__(self, n_components=2, learning_rate=0.1, batch_size=10, cd_steps=1, n_epochs=100,
                 init_scale=0.01, convergence_tol=0.0, momentum=0.0, weight_decay=0.0,
                 learn_lateral=True, random_state=0):
        self.n_components = n_components
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.cd_steps = cd_steps
        self.n_epochs = n_epochs
        self.init_scale = init_scale
        self.convergence_tol = convergence_tol
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.learn_lateral = learn_lateral
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_family(X, UnitFamily.BINARY)
        self.seed_ = seed_from(self.random_state)
        self.params_, self.report_ = train_bm(self._config(self.seed_), X, self.n_components,
                                              learn_lateral=self.learn_lateral)
        self.n_features_in_ = X.shape[1]
        return self

    @property
    def components_(self):
        return self.params_.base.W.T

    @property
    def intercept_visible_(self):
        return self.params_.base.b

    @property
    def intercept_hidden_(self):
        return self.params_.base.c

    def transform(self, X):
        """``E[h | v]`` from clamped Gibbs (closed form while ``J`` is zero)."""
        check_is_fitted(self, "params_")
        X = check_family(X, UnitFamily.BINARY, allow_empty=True)
        if X.shape[0] == 0:
            return np.zeros((0, self.params_.p))
        mean, _ = _gibbs.bm_clamped_hidden_moments(self.params_, X, 200, rng_stream(self.seed_, 99))
        return mean

    def inverse_transform(self, H):
        raise NotImplementedError("visible conditionals of a BM depend on the other visible units")

    def gibbs(self, X, k=1, random_state=None):
        check_is_fitted(self, "params_")
        X = check_family(X, UnitFamily.BINARY)
        return _gibbs.bm_chain(self.params_, X, k, rng_stream(seed_from(random_state))).v


class ConditionalRBM(_CDMixin, BaseEstimator):
    """RBM whose biases depend on the previous ``history`` visible frames.

    ``fit`` takes a list of sequences, each an array of shape
    ``(length, n_features)``.
    """

    def __init__(self, n_components=2, history=1, learning_rate=0.1, batch_size=10, cd_steps=1,
                 n_epochs=100, init_scale=0.01, convergence_tol=0.0, momentum=0.0, weight_decay=0.0,
                 learn_directed=True, random_state=0):
        self.n_components = n_components
        self.history = history
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.cd_steps = cd_steps
        self.n_epochs = n_epochs
        self.init_scale = init_scale
        self.convergence_tol = convergence_tol
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.learn_directed = learn_directed
        self.random_state = random_state

    def fit(self, X, y=None):
        sequences = [check_family(s, UnitFamily.BINARY, name=f"sequence {i}") for i, s in enumerate(X)]
        self.seed_ = seed_from(self.random_state)
        self.params_, self.report_ = _crbm.train_crbm(
            self._config(self.seed_), sequences, self.history, self.n_components,
            learn_directed=self.learn_directed,
        )
        self.n_features_in_ = sequences[0].shape[1]
        return self

    def transform(self, histories, frames):
        """Hidden conditional means of ``frames`` given their ``histories``."""
        check_is_fitted(self, "params_")
        _, c_hat = _crbm.effective_biases(self.params_, histories)
        return cond_mean_hidden(self.params_.base, np.asarray(frames, dtype=np.float64), c_hat)

    def generate(self, seed_history, steps, k=1, random_state=None):
        check_is_fitted(self, "params_")
        return _crbm.generate_sequence(self.params_, seed_history, steps, k, rng_stream(seed_from(random_state)))


class DBNAutoencoder(TransformerMixin, BaseEstimator):
    """Greedily pre-trained RBM stack unrolled into an autoencoder.

    ``hidden_layer_sizes`` lists the encoder layers after the input, e.g.
    ``(4, 2)`` gives an ``n_features -> 4 -> 2 -> 4 -> n_features``
    network. With ``pretrain=False`` the same network starts from small
    random weights instead.
    """

    def __init__(self, hidden_layer_sizes=(4, 2), pretrain=True, learning_rate=0.1, batch_size=10,
                 cd_steps=1, n_epochs=50, init_scale=0.01, finetune_learning_rate=1.0,
                 finetune_batch_size=10, finetune_epochs=50, momentum=0.0, sample_upward=False,
                 random_state=0):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.pretrain = pretrain
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.cd_steps = cd_steps
        self.n_epochs = n_epochs
        self.init_scale = init_scale
        self.finetune_learning_rate = finetune_learning_rate
        self.finetune_batch_size = finetune_batch_size
        self.finetune_epochs = finetune_epochs
        self.momentum = momentum
        self.sample_upward = sample_upward
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_family(X, UnitFamily.BINARY)
        sizes = check_layer_sizes([X.shape[1], *self.hidden_layer_sizes], X.shape[1])
        seed = seed_from(self.random_state)
        self.seed_ = seed
        pre_config = TrainConfig(learning_rate=self.learning_rate, batch_size=self.batch_size,
                                 cd_steps=self.cd_steps, max_epochs=self.n_epochs,
                                 init_scale=self.init_scale, seed=seed)
        if self.pretrain:
            self.stack_, self.pretrain_reports_ = _dbn.pretrain(
                _dbn.DbnSpec(tuple(sizes)), X, pre_config, self.sample_upward, return_reports=True)
            initial = _dbn.unroll_autoencoder(self.stack_)
        else:
            self.stack_, self.pretrain_reports_ = None, []
            initial = _dbn.random_autoencoder(sizes, self.init_scale, rng_stream(seed, 7))
        ft_config = TrainConfig(learning_rate=self.finetune_learning_rate,
                                batch_size=min(self.finetune_batch_size, X.shape[0]),
                                max_epochs=self.finetune_epochs, momentum=self.momentum, seed=seed)
        self.initial_mlp_ = initial
        self.mlp_, self.report_ = _dbn.finetune(initial, X, ft_config)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "mlp_")
        return _dbn.encode(self.mlp_, np.asarray(X, dtype=np.float64))

    def reconstruct(self, X):
        check_is_fitted(self, "mlp_")
        return _dbn.reconstruct(self.mlp_, np.asarray(X, dtype=np.float64))

    def score(self, X, y=None):
        """Negative reconstruction MSE (higher is better)."""
        check_is_fitted(self, "mlp_")
        return -_dbn.mse_loss(self.mlp_, X)


class HopfieldNetwork(BaseEstimator):
    """Hebbian associative memory; ``predict`` recalls each probe."""

    def __init__(self, convention="plus_minus_one", threshold=0.0, max_sweeps=100):
        self.convention = convention
        self.threshold = threshold
        self.max_sweeps = max_sweeps

    def fit(self, X, y=None):
        self.net_ = _hopfield.hebbian_train(X, self.convention, self.threshold)
        self.n_features_in_ = self.net_.d
        return self

    def predict(self, X):
        check_is_fitted(self, "net_")
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.stack([_hopfield.recall(self.net_, x, self.max_sweeps) for x in X])

    def energy(self, X):
        check_is_fitted(self, "net_")
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.array([_hopfield.hopfield_energy(self.net_, x) for x in X])
