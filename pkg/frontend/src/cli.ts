#!/usr/bin/env node
/** CLI: export image-folder datasets to .dpf feature files. */

import yargs from 'yargs'
import { hideBin } from 'yargs/helpers'
import { runExport } from './export'
import { builtinNames } from './zoo'

async function main(): Promise<number> {
  const argv = await yargs(hideBin(process.argv))
    .command('export', 'run a zoo model over an image folder and write .dpf', y =>
      y
        .option('model', {
          type: 'string',
          demandOption: true,
          describe: `zoo model name (${builtinNames().join(', ')}) or a tfjs model directory`,
        })
        .option('data', {
          type: 'string',
          demandOption: true,
          describe: 'dataset directory, one subdirectory per class',
        })
        .option('resize', {
          type: 'number',
          describe: 'square input resolution (default: model native)',
        })
        .option('kind', {
          choices: ['features', 'logits'] as const,
          default: 'features' as const,
          describe: 'penultimate-layer features or classifier logits',
        })
        .option('batch-size', { type: 'number', default: 32 })
        .option('out', { type: 'string', demandOption: true, describe: 'output .dpf path' }),
    )
    .demandCommand(1)
    .strict()
    .parse()

  const result = await runExport({
    modelName: argv.model as string,
    dataDir: argv.data as string,
    resize: argv.resize as number | undefined,
    batchSize: argv['batch-size'] as number,
    kind: argv.kind as 'features' | 'logits',
    outPath: argv.out as string,
  })
  console.log(
    `wrote ${result.nSamples} x ${result.dim} (${result.classes.length} classes` +
      `${result.skipped.length ? `, ${result.skipped.length} skipped` : ''}) to ${argv.out}`,
  )
  return 0
}

main()
  .then(code => process.exit(code))
  .catch(err => {
    console.error(`error: ${err.message ?? err}`)
    process.exit(1)
  })
