/** Command-line entry: render one figure from dmtlab CSV files. */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { CsvSchemaError } from "./csv.js";
import { FigureKind, render } from "./figures.js";

export async function main(argv: string[]): Promise<number> {
  const args = await yargs(argv)
    .command("render", "render a figure from dmtlab CSV output")
    .demandCommand(1)
    .option("figure", {
      choices: ["dmt-family", "outage-sweep"] as const,
      demandOption: true,
      describe: "figure kind",
    })
    .option("input", {
      type: "string",
      array: true,
      demandOption: true,
      describe: "input CSV path(s); one sweep per scenario for outage-sweep",
    })
    .option("output", {
      type: "string",
      demandOption: true,
      describe: "output SVG path",
    })
    .option("ref-slope", {
      type: "number",
      array: true,
      default: [] as number[],
      describe: "analytic diversity orders to overlay as dashed lines",
    })
    .option("title", { type: "string" })
    .strict()
    .parse();

  try {
    render({
      figure: args.figure as FigureKind,
      inputs: args.input,
      referenceSlopes: args["ref-slope"],
      output: args.output,
      title: args.title,
    });
  } catch (err) {
    if (err instanceof CsvSchemaError || err instanceof Error) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
  console.error(`wrote ${args.output}`);
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => process.exit(code));
}
