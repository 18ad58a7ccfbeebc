# Controller, plants, simulation, scenarios and export
