"""A classifier whose only trained parameter is the bath temperature.

Four nonnegative features become a two-qubit pure state, a reservoir maps
it to its steady state, and a closed-form linear readout separates the
classes. The reservoir is chosen from a grid by training accuracy.
"""

from dissipative_qml.classify import accuracy, fit, squeezed_grid, synthetic_dataset, train_test_split

train, test = train_test_split(synthetic_dataset(40, seed=0), 0.3, seed=0)
for name, grid in (("thermal", None), ("squeezed", squeezed_grid())):
    model = fit(train, grid)
    print(f"{name:8s} reservoir {model.reservoir}: train {model.train_accuracy:.3f}, test {accuracy(model, test):.3f}")
