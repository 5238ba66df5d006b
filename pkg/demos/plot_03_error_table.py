"""
Error table for three equations and six shapes
==============================================

Trains one network per equation and compares FCNN(6e-5), FDM(2e-5) and
FDM(6e-5) against explicit runs with 2e-7. Expect ten minutes or more on one
core; the references take 30000 steps each.
"""

from deepfcnn import EquationParams, TrainConfig, make_training_pair, train, unit_square
from deepfcnn.diagnostics import table1_harness, table_to_csv
from deepfcnn.training import init_model

grid = unit_square(100)
models = {}
for kind in ("heat", "fisher", "allen_cahn"):
    eq = EquationParams.default(kind)
    cfg = TrainConfig(seed=0)
    result = train(init_model(eq, cfg), make_training_pair(eq, grid, cfg), cfg)
    print(f"{kind}: loss {result.final_loss:.2e} after {result.updates} updates")
    models[kind] = result.model

rows = table1_harness(models=models, spec=grid)
print(table_to_csv(rows, "table1.csv"))
