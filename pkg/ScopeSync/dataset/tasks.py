from enum import unique, Enum

from ..exceptions import InvalidArgumentError


@unique
class TaskLabel(Enum):
    """Navigation task taxonomy; the integer is the on-disk task id."""

    INSERTION_BOTTOM = 0
    INSERTION_LEFT = 1
    INSERTION_RIGHT = 2
    INSERTION_TOP = 3
    INSERTION_LUMEN = 4
    """Insertion keeping the lumen centred"""

    RETRACTION_BOTTOM = 5
    RETRACTION_LEFT = 6
    RETRACTION_RIGHT = 7
    RETRACTION_TOP = 8
    RETRACTION_LUMEN = 9
    """Retraction keeping the lumen centred"""

    FAILURE = 10
    """Lumen loss, wall contact or fold engagement"""

    RECOVERY = 11
    """Corrective manoeuvre after a failure"""

    @property
    def label(self):
        return self.name.lower()

    @property
    def default_instruction(self):
        if self is TaskLabel.FAILURE:
            return 'Lose the lumen during navigation.'
        if self is TaskLabel.RECOVERY:
            return 'Recover the lumen view after losing it.'
        motion, target = self.label.split('_')
        verb = 'Insert' if motion == 'insertion' else 'Retract'
        if target == 'lumen':
            return f'{verb} the scope while keeping the lumen centred.'
        return f'{verb} the scope while scanning the {target} wall.'

    @classmethod
    def parse(cls, value):
        """A TaskLabel from its id, its name or an existing label."""
        if isinstance(value, cls):
            return value
        try:
            return cls(int(value))
        except (TypeError, ValueError):
            pass
        try:
            return cls[str(value).upper()]
        except KeyError:
            raise InvalidArgumentError(f'unknown task {value!r}, expected 0-11 or a task name') from None
