"""Exception hierarchy shared by all belieftree modules."""


class BeliefTreeError(Exception):
    """Base class for every error raised by this package."""


# -- tensor / distribution errors -------------------------------------------

class ZeroMass(BeliefTreeError):
    """A weight vector summed to zero; the belief has been annihilated."""


class DimensionMismatch(BeliefTreeError):
    """Two distributions or vectors that must share a cardinality do not."""


class UnknownAxis(BeliefTreeError):
    """A named axis was requested that the tensor does not carry."""


class ShapeMismatch(BeliefTreeError):
    """A tensor's axes or cardinalities do not match what was declared."""


# -- model construction errors ----------------------------------------------

class ValidationError(BeliefTreeError):
    """A model-level invariant was violated at build time."""


class DuplicateName(ValidationError):
    """A variable with this name was already declared."""


class BadPrefix(ValidationError):
    """Variable name does not carry the required S_/O_/A_ prefix."""


class UnknownParent(ValidationError):
    """A declared parent does not name a known state (or the action)."""


class UnknownState(ValidationError):
    """A transition was registered for an undeclared state."""


class UnknownObservation(ValidationError):
    """A preference subset names an undeclared observation."""


class OverlappingSubsets(ValidationError):
    """Preference subsets must partition the observations they cover."""


# -- inference errors --------------------------------------------------------

class MissingPrior(BeliefTreeError):
    """No prior supplied for a state when building the factor graph."""


class MissingObservation(BeliefTreeError):
    """No observed value supplied for an observation variable."""


class IndexOutOfRange(BeliefTreeError):
    """An observed index (or action) exceeds the variable's cardinality."""


class MissingInbound(BeliefTreeError):
    """A message was requested before all of its inputs were available."""


# -- prediction / planning errors --------------------------------------------

class ActionOutOfRange(BeliefTreeError):
    """Action index outside 0..n_actions-1."""


class AlreadyExpanded(BeliefTreeError):
    """expand_children called on a node that already has children."""


class NotExpanded(BeliefTreeError):
    """select_action called on a root with no children."""


class ChildNotExpanded(BeliefTreeError):
    """agent.update called but the chosen child was never created."""


# -- environment errors -------------------------------------------------------

class EpisodeFinished(BeliefTreeError):
    """execute called after the episode ended."""


class EpisodeNotFinished(BeliefTreeError):
    """reward requested before the episode ended."""


# -- inspector errors ----------------------------------------------------------

class UnknownNode(BeliefTreeError):
    """A tree-node id did not resolve in the current planning tree."""


class NoPlanningDone(BeliefTreeError):
    """execute_best_action requested before any planning iteration ran."""


class MalformedCommand(BeliefTreeError):
    """An inspector command was syntactically or semantically invalid."""
