export {
  FigureError,
  LabeledPoint,
  loadPoints,
  loadRuns,
  parseRunName,
  expandGlob,
  RunTable,
} from "./csv";
export {
  AggregateMode,
  Band,
  aggregateSeries,
  curveBands,
  groupByOptimizer,
  mean,
  quantile,
  sampleStd,
  stepsizeBands,
} from "./aggregate";
export {
  BoundarySpec,
  CurvesSpec,
  FigureSpec,
  RenderResult,
  StepsizeSpec,
  figureSchema,
  loadSpec,
  render,
} from "./figure";
