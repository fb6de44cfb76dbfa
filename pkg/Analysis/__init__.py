from .Signal import TemplateBank, OutcomeVector, AliasingError, AlignmentError, SingularGramError
from .Signal import analytic_signal, demodulate_quadratures, matched_filter_outcomes, build_template_bank
from .Estimation import PosteriorTrajectory, RateEstimate, MonteCarloEstimate, TrackingError, MonteCarloToleranceError
from .Estimation import bayes_track, decay_prior_step, empirical_measurement_rate, confidence_time
from .Theory import EmittedStatePair, OutcomeModel, DephasingResult, FitError
from .Theory import emitted_overlap, dephasing_rate_bound, heterodyne_rate_bound, accessible_information_rate
