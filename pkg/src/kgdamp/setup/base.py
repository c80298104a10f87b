# -*- coding: utf-8 -*-
"""
Base setup module.
Part of the kg-damp package.
"""

from __future__ import annotations

import logging
import typing

if typing.TYPE_CHECKING:
    from kgdamp.algorithms import BaseAlgorithm
    from kgdamp.algorithms.data.problem import Problem


logger = logging.getLogger(__name__)


class BaseSetup:
    """
    Base class for kg-damp setups.

    A setup holds one problem definition and a registry of algorithms that run on it.

    Attributes
    ----------
    algorithms : dict[str, BaseAlgorithm]
        Algorithms added to the setup, keyed by their names.
    problem : Problem
        Grid, damper, nonlinearity and initial data.

    Warning
    -------
    The BaseSetup class is not intended for direct instantiation by users.
    """

    algorithms: typing.Dict[str, BaseAlgorithm]
    problem: Problem

    def rollback(self) -> None:
        """
        Restore the problem to its initial state. Implemented by subclasses.
        """
        raise NotImplementedError("Rollback method must be implemented by subclasses.")

    def add_algorithms(self, *algorithms: BaseAlgorithm) -> None:
        """
        Add algorithms to the setup and attach the problem to them.

        Parameters
        ----------
        algorithms : variable number of BaseAlgorithm
            Instantiated algorithms with unique names.
        """
        self.algorithms = {
            **getattr(self, "algorithms", {}),
            **{alg.name: alg._set_data(data=self.problem) for alg in algorithms},
        }

    def run_all(self) -> None:
        """Run every algorithm added to the setup, in insertion order."""
        for alg_name in self.algorithms:
            self.run_by_name(name=alg_name)
        logger.info("all done")

    def run_by_name(self, name: str) -> None:
        """
        Run one algorithm and store its result on the algorithm instance.

        Raises
        ------
        KeyError
            If no algorithm has that name.
        """
        logger.info("Running %s...", name)
        logger.debug("...with parameters: %s", self[name].run_params)
        self[name]._pre_run()
        result = self[name].run()
        logger.debug("...saving %s result", name)
        self[name]._set_result(result)

    def __getitem__(self, name: str) -> BaseAlgorithm:
        """
        Retrieve an algorithm by name.

        Raises
        ------
        KeyError
            If no algorithm has that name.
        """
        if name in self.algorithms:
            return self.algorithms[name]
        else:
            raise KeyError(f"No algorithm named '{name}' exists.")

    def get(
        self, name: str, default: typing.Optional[BaseAlgorithm] = None
    ) -> typing.Optional[BaseAlgorithm]:
        """Retrieve an algorithm by name, or ``default`` when it is absent."""
        return self.algorithms.get(name, default)
