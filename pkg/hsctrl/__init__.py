"""Hard/soft time-varying constraint control: closed-form controller, plants and simulator."""

__version__ = "1.0.0"
