"""Task graph, event engine and simulation driver.

Import from the submodules (``engine``, ``graph``, ``simulation``); this
package stays empty so that scenario parsing can use the task defaults
without pulling in the simulator.
"""
